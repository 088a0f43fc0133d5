#include "msk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <iomanip>

#include "msk/parallel.hpp"

namespace msk::synth {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Days since 1970-01-01 (proleptic Gregorian), after H. Hinnant.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
    std::ostringstream out;
    out << std::setfill('0') << std::setw(4) << y << '-' << std::setw(2) << m << '-' << std::setw(2) << d;
    return out.str();
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
    return splitmix(splitmix(splitmix(seed ^ (stream * 0xD1B54A32D192ED03ULL)) ^ a) ^ (b + 0x632BE59BD9B4E019ULL));
}

std::vector<std::string> weekdays(const std::string& first_day, std::size_t count) {
    if (!is_iso_date(first_day)) throw Error("bad first day '" + first_day + "'");
    std::int64_t z = days_from_civil(std::stoll(first_day.substr(0, 4)),
                                     static_cast<unsigned>(std::stoi(first_day.substr(5, 2))),
                                     static_cast<unsigned>(std::stoi(first_day.substr(8, 2))));
    std::vector<std::string> out;
    while (out.size() < count) {
        // 1970-01-01 was a Thursday; weekday 0 = Monday.
        const std::int64_t weekday = ((z % 7) + 7 + 3) % 7;
        if (weekday < 5) out.push_back(civil_from_days(z));
        ++z;
    }
    return out;
}

NetworkGraph make_network(std::size_t n_segments, std::uint64_t seed) {
    if (n_segments < 3) throw Error("network needs at least three driving segments");
    NetworkGraph g;
    const std::size_t trunk = std::max<std::size_t>(1, n_segments / 3);
    const std::size_t feeders = n_segments - trunk;
    const std::size_t branch_a = (feeders + 1) / 2;
    const std::size_t branch_b = feeders - branch_a;

    std::mt19937_64 rng(mix_seed(seed, 3, 0));
    std::uniform_real_distribution<double> length(0.3, 2.0);
    std::size_t seg_counter = 0;
    auto add_node = [&](const std::string& id) { g.nodes.push_back(id); };
    auto add_edge = [&](const std::string& tail, const std::string& head, double x0, double y0,
                        double x1, double y1) {
        std::ostringstream label;
        label << 's' << std::setw(3) << std::setfill('0') << seg_counter++;
        std::ostringstream geom;
        geom << std::setprecision(10) << R"({"type":"LineString","coordinates":[[)" << x0 << ','
             << y0 << "],[" << x1 << ',' << y1 << "]]}";
        g.edges.push_back({label.str(), tail, head, length(rng), Mode::Driving, geom.str()});
    };

    add_node("merge");
    const double lon0 = -122.35, lat0 = 37.85, d = 0.01;
    auto feeder = [&](char name, std::size_t count, double dlat) {
        std::string prev = std::string("a") + name + "0";
        add_node(prev);
        g.origins.push_back(prev);
        for (std::size_t i = 0; i < count; ++i) {
            const bool last = i + 1 == count;
            const std::string next = last ? "merge" : std::string("a") + name + std::to_string(i + 1);
            if (!last) {
                add_node(next);
                g.origins.push_back(next);  // on-ramp
            }
            const double x0 = lon0 - d * static_cast<double>(count - i);
            const double x1 = lon0 - d * static_cast<double>(count - i - 1);
            add_edge(prev, next, x0, lat0 + dlat * static_cast<double>(count - i), x1,
                     lat0 + dlat * static_cast<double>(count - i - 1));
            prev = next;
        }
    };
    feeder('n', branch_a, d);
    if (branch_b > 0) feeder('s', branch_b, -d);

    std::string prev = "merge";
    for (std::size_t i = 0; i < trunk; ++i) {
        const std::string next = i + 1 == trunk ? "bridge" : "t" + std::to_string(i + 1);
        add_node(next);
        add_edge(prev, next, lon0 + d * static_cast<double>(i), lat0,
                 lon0 + d * static_cast<double>(i + 1), lat0);
        prev = next;
    }
    g.destinations.push_back("bridge");

    for (const char* n : {"bart_0", "bart_1", "bart_2"}) add_node(n);
    g.edges.push_back({"bart_01", "bart_0", "bart_1", 3.0, Mode::Transit, ""});
    g.edges.push_back({"bart_12", "bart_1", "bart_2", 4.5, Mode::Transit, ""});
    g.validate();
    return g;
}

Scenario generate_scenario(const GeneratorConfig& cfg) {
    cfg.lags.validate();
    if (cfg.days < 2) throw Error("need at least two days");
    if (cfg.hours.empty()) throw Error("need at least one hour");
    if (!(cfg.lag_correlation >= 0 && cfg.lag_correlation < 1)) throw Error("lag correlation must lie in [0,1)");
    if (cfg.total_travelers <= 0) throw Error("total_travelers must be positive");

    Scenario sc;
    sc.graph = make_network(cfg.segments, cfg.seed);
    const auto driving = sc.graph.driving_edges();
    const std::size_t n_seg = driving.size();
    const std::size_t n_lag = static_cast<std::size_t>(cfg.lags.lag_count());
    const std::size_t D = n_seg * n_lag;
    const int delta = cfg.lags.delta_minutes;

    std::vector<int> hour_starts;
    for (const auto& h : cfg.hours) hour_starts.push_back(parse_clock(h));
    std::sort(hour_starts.begin(), hour_starts.end());
    hour_starts.erase(std::unique(hour_starts.begin(), hour_starts.end()), hour_starts.end());
    const int first = hour_starts.front() - cfg.lags.horizon_minutes();
    if (first < 0) throw Error("the lag horizon reaches before midnight");

    // Intervals needed by any hour, on one contiguous delta grid per hour.
    std::set<int> interval_set;
    for (int h : hour_starts)
        for (std::size_t k = 0; k < n_lag; ++k) interval_set.insert(h - static_cast<int>(k) * delta);
    const std::vector<int> intervals(interval_set.begin(), interval_set.end());

    const auto day_ids = weekdays(cfg.first_day, cfg.days);
    const std::size_t m = cfg.days;

    // Travel times: tt[(day * n_seg + seg) * intervals + t], minutes.
    std::vector<double> tt(m * n_seg * intervals.size());
    const double rho = cfg.lag_correlation;
    const double innov = std::sqrt(1.0 - rho * rho);
    parallel_for(n_seg, [&](std::size_t j) {
        const double free_flow = 60.0 * driving[j]->length_miles / cfg.free_flow_mph;
        for (std::size_t i = 0; i < m; ++i) {
            std::mt19937_64 rng(mix_seed(cfg.seed, 1, j, i));
            std::normal_distribution<double> normal(0.0, 1.0);
            double z = normal(rng);
            int prev_t = intervals.front();
            for (std::size_t t = 0; t < intervals.size(); ++t) {
                // Gaps between non-adjacent intervals decay the correlation further.
                const int gap = (intervals[t] - prev_t) / delta;
                for (int s = 0; s < gap; ++s) z = rho * z + innov * normal(rng);
                prev_t = intervals[t];
                tt[(i * n_seg + j) * intervals.size() + t] =
                    free_flow * std::exp(cfg.log_spread * (z + 1.0));
            }
        }
    });

    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n_seg; ++j)
            for (std::size_t t = 0; t < intervals.size(); ++t) {
                TravelTimeRow row;
                row.day = day_ids[i];
                row.segment = driving[j]->segment;
                row.interval_start = intervals[t];
                row.speed_mph = 60.0 * driving[j]->length_miles / tt[(i * n_seg + j) * intervals.size() + t];
                row.health = 1.0;
                sc.travel.rows.push_back(std::move(row));
            }

    // Ground-truth support, shared by every hour.
    std::vector<std::size_t> support = cfg.true_support;
    std::vector<double> beta_vals = cfg.true_beta;
    if (support.empty()) {
        std::mt19937_64 rng(mix_seed(cfg.seed, 4, 0));
        std::vector<std::size_t> segs(n_seg);
        std::iota(segs.begin(), segs.end(), 0);
        std::shuffle(segs.begin(), segs.end(), rng);
        const std::size_t s = std::min(cfg.support_size, n_seg);
        std::uniform_int_distribution<int> lag(0, cfg.lags.p);
        std::uniform_real_distribution<double> mag(0.25, 0.5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t a = 0; a < s; ++a) {
            support.push_back(segs[a] * n_lag + static_cast<std::size_t>(lag(rng)));
            beta_vals.push_back((u(rng) < 0.75 ? -1.0 : 1.0) * mag(rng));
        }
    }
    if (beta_vals.size() != support.size()) throw Error("true_beta must align with true_support");
    for (std::size_t c : support)
        if (c >= D) throw Error("true support index out of range");

    for (std::size_t h = 0; h < hour_starts.size(); ++h) {
        const int hs = hour_starts[h];
        Dataset ds;
        ds.hour_label = format_clock(hs);
        ds.lags = cfg.lags;
        for (const auto* e : driving) ds.segment_labels.push_back(e->segment);
        for (std::size_t j = 0; j < n_seg; ++j)
            for (std::size_t k = 0; k < n_lag; ++k) ds.column_map.push_back({j, static_cast<int>(k)});
        ds.x = Matrix(m, D);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n_seg; ++j)
                for (std::size_t k = 0; k < n_lag; ++k) {
                    const int when = hs - static_cast<int>(k) * delta;
                    const auto t = static_cast<std::size_t>(
                        std::lower_bound(intervals.begin(), intervals.end(), when) - intervals.begin());
                    ds.x(i, j * n_lag + k) = tt[(i * n_seg + j) * intervals.size() + t];
                }
        ds.days = day_ids;

        const Standardization st = compute_standardization(ds.x);
        GroundTruth truth;
        truth.hour = ds.hour_label;
        truth.intercept = cfg.intercept;
        truth.support = support;
        truth.beta.assign(D, 0.0);
        for (std::size_t a = 0; a < support.size(); ++a) truth.beta[support[a]] = beta_vals[a];

        ds.q_drive.resize(m);
        ds.q_transit.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            double eta = truth.intercept;
            for (std::size_t c : support)
                eta += truth.beta[c] * (ds.x(i, c) - st.mean[c]) / st.scale[c];
            std::mt19937_64 rng(mix_seed(cfg.seed, 2, static_cast<std::uint64_t>(hs), i));
            std::binomial_distribution<std::int64_t> draw(cfg.total_travelers, sigmoid(eta));
            ds.q_drive[i] = draw(rng);
            ds.q_transit[i] = cfg.total_travelers - ds.q_drive[i];
            sc.flows.rows.push_back({day_ids[i], ds.hour_label, ds.q_drive[i], ds.q_transit[i]});
        }
        sc.datasets.push_back(std::move(ds));
        sc.truths.push_back(std::move(truth));
    }
    return sc;
}

std::pair<Dataset, GroundTruth> generate(std::uint64_t seed, std::size_t m, std::size_t n_segments,
                                         const LagSpec& lags,
                                         std::vector<std::size_t> true_support,
                                         std::vector<double> true_beta,
                                         std::int64_t total_travelers) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.days = m;
    cfg.segments = n_segments;
    cfg.lags = lags;
    cfg.true_support = std::move(true_support);
    cfg.true_beta = std::move(true_beta);
    cfg.support_size = cfg.true_support.size();
    cfg.total_travelers = total_travelers;
    Scenario sc = generate_scenario(cfg);
    return {std::move(sc.datasets.front()), std::move(sc.truths.front())};
}

BruteForceResult brute_force_logistic(const Dataset& ds, std::span<const std::size_t> active,
                                      double bound, double step) {
    if (active.size() > 2) throw Error("brute force handles at most two columns");
    if (!(step > 0) || !(bound > 0)) throw Error("brute force needs positive bound and step");
    const std::size_t params = active.size() + 1;
    const std::size_t m = ds.rows();
    std::vector<std::vector<double>> cols;
    for (std::size_t c : active) cols.push_back(ds.x.column(c));
    std::vector<double> q1(m), q0(m);
    for (std::size_t i = 0; i < m; ++i) {
        q1[i] = static_cast<double>(ds.q_drive[i]);
        q0[i] = static_cast<double>(ds.q_transit[i]);
    }
    auto loglik = [&](const double* theta) {
        double ll = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double eta = theta[0];
            for (std::size_t a = 0; a + 1 < params; ++a) eta += theta[a + 1] * cols[a][i];
            ll -= q1[i] * softplus(-eta) + q0[i] * softplus(eta);
        }
        return ll;
    };

    std::vector<double> center(params, 0.0);
    double half_width = bound;
    double h = step;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> best(params, 0.0);
    for (int round = 0; round < 3; ++round) {
        const auto n = static_cast<long>(std::floor(half_width / h + 1e-9));
        const long side = 2 * n + 1;
        long total = 1;
        for (std::size_t p = 0; p < params; ++p) total *= side;
        std::vector<double> theta(params);
        std::vector<double> round_best = best;
        double round_ll = -std::numeric_limits<double>::infinity();
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            for (std::size_t p = 0; p < params; ++p) {
                theta[p] = center[p] + h * static_cast<double>(rem % side - n);
                rem /= side;
            }
            const double ll = loglik(theta.data());
            if (ll > round_ll) {
                round_ll = ll;
                round_best = theta;
            }
        }
        if (round_ll > best_ll) {
            best_ll = round_ll;
            best = round_best;
        }
        // Next round: 10x finer grid spanning two coarse cells each way.
        center = best;
        half_width = 2.0 * h;
        h /= 10.0;
    }
    BruteForceResult out;
    out.intercept = best[0];
    out.coefficients.assign(best.begin() + 1, best.end());
    out.loglik = best_ll;
    return out;
}

}  // namespace msk::synth
