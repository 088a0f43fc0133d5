#pragma once

// Small builders and random generators shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "msk/types.hpp"

namespace msk::testkit {

// One lag per column: column d is segment d at lag 0.
inline Dataset make_dataset(Matrix x, std::vector<std::int64_t> q1, std::vector<std::int64_t> q0) {
    Dataset ds;
    ds.hour_label = "08:00";
    ds.lags = LagSpec{0, 10};
    for (std::size_t d = 0; d < x.cols(); ++d) {
        ds.column_map.push_back({d, 0});
        ds.segment_labels.push_back("c" + std::to_string(d));
    }
    ds.x = std::move(x);
    ds.q_drive = std::move(q1);
    ds.q_transit = std::move(q0);
    return ds;
}

// m x D standard-normal design with binomial counts drawn from
// sigma(b0 + x . beta).
inline Dataset random_logistic(std::mt19937_64& rng, std::size_t m, std::size_t D,
                               double b0, const std::vector<double>& beta, std::int64_t total) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(m, D);
    std::vector<std::int64_t> q1(m), q0(m);
    for (std::size_t i = 0; i < m; ++i) {
        double eta = b0;
        for (std::size_t d = 0; d < D; ++d) {
            x(i, d) = normal(rng);
            if (d < beta.size()) eta += beta[d] * x(i, d);
        }
        std::binomial_distribution<std::int64_t> draw(total, 1.0 / (1.0 + std::exp(-eta)));
        q1[i] = draw(rng);
        q0[i] = total - q1[i];
    }
    return make_dataset(std::move(x), std::move(q1), std::move(q0));
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("msk_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace msk::testkit
