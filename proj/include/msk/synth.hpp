#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msk/ingest.hpp"
#include "msk/types.hpp"

namespace msk::synth {

struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::size_t days = 130;
    std::size_t segments = 158;
    LagSpec lags{6, 10};
    std::vector<std::string> hours{"08:00"};

    // Ground truth on standardized columns. When `true_support` is empty,
    // `support_size` columns on distinct segments are drawn from the seed.
    std::vector<std::size_t> true_support;
    std::vector<double> true_beta;  // aligned with true_support
    std::size_t support_size = 8;
    double intercept = 0.5;

    std::int64_t total_travelers = 10'000;

    // Latent AR(1) over consecutive intervals; travel time is lognormal
    // around the free-flow time with this log-scale spread.
    double lag_correlation = 0.8;
    double log_spread = 0.25;
    double free_flow_mph = 65.0;

    std::string first_day = "2019-01-07";
};

struct GroundTruth {
    std::string hour;
    double intercept = 0.0;
    std::vector<std::size_t> support;
    std::vector<double> beta;  // length D, zero off the support
};

struct Scenario {
    NetworkGraph graph;
    RawTravelTimeTable travel;
    RawFlowTable flows;
    std::vector<Dataset> datasets;  // one per hour, raw travel-time minutes
    std::vector<GroundTruth> truths;
};

Scenario generate_scenario(const GeneratorConfig& cfg);

/// Single-hour draw: the dataset and its ground truth.
std::pair<Dataset, GroundTruth> generate(std::uint64_t seed, std::size_t m, std::size_t n_segments,
                                         const LagSpec& lags,
                                         std::vector<std::size_t> true_support,
                                         std::vector<double> true_beta,
                                         std::int64_t total_travelers);

/// Branching freeway network: two feeder chains whose nodes are on-ramps
/// (origins) merging into a trunk that ends at the destination, plus a
/// two-segment transit line.
NetworkGraph make_network(std::size_t n_segments, std::uint64_t seed);

/// Weekdays starting at `first_day` (ISO-8601).
std::vector<std::string> weekdays(const std::string& first_day, std::size_t count);

/// Exhaustive grid maximizer of the weighted log-likelihood over
/// [-bound, bound] for the intercept and up to two active columns, refined by
/// two rounds of 10x grid shrinkage around the incumbent.
struct BruteForceResult {
    double intercept = 0.0;
    std::vector<double> coefficients;  // aligned with `active`
    double loglik = 0.0;
};
BruteForceResult brute_force_logistic(const Dataset& ds, std::span<const std::size_t> active,
                                      double bound, double step);

// splitmix64-style mixing for counter-based streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0);

}  // namespace msk::synth
