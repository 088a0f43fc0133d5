#include "msk/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "msk/parallel.hpp"

namespace msk {
namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw Error("route count overflows 64 bits");
    return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw Error("route count overflows 64 bits");
    return r;
}

// Node-indexed view of the driving edges.
struct DrivingGraph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (tail, head) per driving segment
    std::vector<std::vector<std::size_t>> out_edges;
    std::vector<char> is_origin, is_destination;

    explicit DrivingGraph(const NetworkGraph& g) {
        std::unordered_map<std::string, std::size_t> id;
        for (const auto& n : g.nodes) id.emplace(n, id.size());
        n_nodes = id.size();
        out_edges.resize(n_nodes);
        for (const auto* e : g.driving_edges()) {
            const std::size_t u = id.at(e->tail), v = id.at(e->head);
            out_edges[u].push_back(edges.size());
            edges.emplace_back(u, v);
        }
        is_origin.assign(n_nodes, 0);
        is_destination.assign(n_nodes, 0);
        for (const auto& o : g.origins) is_origin[id.at(o)] = 1;
        for (const auto& d : g.destinations) is_destination[id.at(d)] = 1;
    }

    std::optional<std::vector<std::size_t>> topological_order() const {
        std::vector<std::size_t> indeg(n_nodes, 0);
        for (const auto& [u, v] : edges) ++indeg[v];
        std::vector<std::size_t> order, ready;
        for (std::size_t v = n_nodes; v-- > 0;)
            if (indeg[v] == 0) ready.push_back(v);
        while (!ready.empty()) {
            const std::size_t u = ready.back();
            ready.pop_back();
            order.push_back(u);
            for (std::size_t e : out_edges[u])
                if (--indeg[edges[e].second] == 0) ready.push_back(edges[e].second);
        }
        if (order.size() != n_nodes) return std::nullopt;
        return order;
    }
};

}  // namespace

std::vector<std::uint64_t> betweenness_by_enumeration(const NetworkGraph& graph,
                                                      std::uint64_t path_cap) {
    const DrivingGraph g(graph);
    std::vector<std::uint64_t> counts(g.edges.size(), 0);
    std::vector<char> on_path(g.n_nodes, 0);
    std::vector<std::size_t> path;
    std::uint64_t total = 0;

    // Every prefix that ends at a destination is a route.
    auto dfs = [&](auto&& self, std::size_t u) -> void {
        for (std::size_t e : g.out_edges[u]) {
            const std::size_t v = g.edges[e].second;
            if (on_path[v]) continue;
            path.push_back(e);
            on_path[v] = 1;
            if (g.is_destination[v]) {
                if (++total > path_cap) throw Error("route enumeration exceeded the path cap");
                for (std::size_t pe : path) ++counts[pe];
            }
            self(self, v);
            on_path[v] = 0;
            path.pop_back();
        }
    };
    for (std::size_t o = 0; o < g.n_nodes; ++o) {
        if (!g.is_origin[o]) continue;
        on_path[o] = 1;
        dfs(dfs, o);
        on_path[o] = 0;
    }
    return counts;
}

std::vector<std::uint64_t> betweenness_centrality(const NetworkGraph& graph,
                                                  const BetweennessOptions& opts) {
    const DrivingGraph g(graph);
    const auto order = g.topological_order();
    if (!order) {
        if (!opts.allow_cycle_enumeration)
            throw CyclicGraph("driving network contains a cycle");
        return betweenness_by_enumeration(graph, opts.path_cap);
    }
    // from[u]: routes from any origin ending at u; to[v]: routes from v to any destination.
    std::vector<std::uint64_t> from(g.n_nodes, 0), to(g.n_nodes, 0);
    for (std::size_t u : *order) {
        if (g.is_origin[u]) from[u] = checked_add(from[u], 1);
        for (std::size_t e : g.out_edges[u]) {
            const std::size_t v = g.edges[e].second;
            from[v] = checked_add(from[v], from[u]);
        }
    }
    for (auto it = order->rbegin(); it != order->rend(); ++it) {
        const std::size_t u = *it;
        if (g.is_destination[u]) to[u] = checked_add(to[u], 1);
        for (std::size_t e : g.out_edges[u]) to[u] = checked_add(to[u], to[g.edges[e].second]);
    }
    std::vector<std::uint64_t> counts(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        counts[e] = checked_mul(from[g.edges[e].first], to[g.edges[e].second]);
    return counts;
}

std::vector<std::size_t> select_by_betweenness(std::span<const std::uint64_t> centrality,
                                               const Dataset& ds, std::int64_t threshold_b,
                                               int lag_kb) {
    if (lag_kb < 0 || lag_kb > ds.lags.p) throw Error("lag_kb must lie in 0..p");
    std::vector<std::size_t> cols;
    for (std::size_t d = 0; d < ds.column_map.size(); ++d) {
        const auto& key = ds.column_map[d];
        if (key.lag != lag_kb) continue;
        if (key.segment >= centrality.size()) throw DimensionMismatch("centrality missing a segment");
        if (threshold_b <= 0 || centrality[key.segment] >= static_cast<std::uint64_t>(threshold_b))
            cols.push_back(d);
    }
    if (cols.empty())
        throw EmptySelection("no segment has betweenness >= " + std::to_string(threshold_b));
    return cols;
}

std::vector<std::size_t> select_by_betweenness(const NetworkGraph& graph, const Dataset& ds,
                                               std::int64_t threshold_b, int lag_kb) {
    return select_by_betweenness(betweenness_centrality(graph), ds, threshold_b, lag_kb);
}

std::vector<double> average_speed(const RawTravelTimeTable& travel, const NetworkGraph& graph,
                                  const std::string& hour) {
    const int start = parse_clock(hour);
    const auto driving = graph.driving_edges();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < driving.size(); ++i) index.emplace(driving[i]->segment, i);
    std::vector<double> sum(driving.size(), 0.0);
    std::vector<std::size_t> n(driving.size(), 0);
    bool hour_seen = false;
    for (const auto& r : travel.rows) {
        if (r.interval_start < start || r.interval_start >= start + 60) continue;
        hour_seen = true;
        if (!r.speed_mph) continue;
        auto it = index.find(r.segment);
        if (it == index.end()) continue;
        sum[it->second] += *r.speed_mph;
        ++n[it->second];
    }
    if (!hour_seen) throw MissingHour(hour);
    std::vector<double> out(driving.size());
    for (std::size_t j = 0; j < driving.size(); ++j) {
        if (n[j] == 0) throw MissingSegmentData(j);
        out[j] = sum[j] / static_cast<double>(n[j]);
    }
    return out;
}

std::vector<std::size_t> select_by_speed(std::span<const double> speeds, const Dataset& ds,
                                         double threshold_v, int lag_kv) {
    if (lag_kv < 0 || lag_kv > ds.lags.p) throw Error("lag_kv must lie in 0..p");
    std::vector<std::size_t> cols;
    for (std::size_t d = 0; d < ds.column_map.size(); ++d) {
        const auto& key = ds.column_map[d];
        if (key.lag != lag_kv) continue;
        if (key.segment >= speeds.size()) throw DimensionMismatch("speed missing a segment");
        if (speeds[key.segment] <= threshold_v) cols.push_back(d);
    }
    if (cols.empty()) throw EmptySelection("no segment has average speed <= threshold");
    return cols;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::NoImprovement: return "no_improvement";
        case StopReason::RankDeficient: return "rank_deficient";
        case StopReason::MaxSteps: return "max_steps";
    }
    return "unknown";
}

std::pair<FitResult, StepwiseTrace> forward_stepwise(const Dataset& ds, const SolverConfig& cfg,
                                                     const FoldPlan& plan, std::size_t max_steps) {
    const auto folds = split_folds(ds, plan);
    std::size_t min_train = ds.rows();
    for (const auto& f : folds) min_train = std::min(min_train, f.train.rows());

    constexpr double kFailed = std::numeric_limits<double>::infinity();
    auto cv_rmse = [&](const std::vector<std::size_t>& active) {
        double total = 0.0;
        for (const auto& f : folds) {
            FitResult fit;
            try {
                fit = fit_mle(f.train, active, cfg);
            } catch (const NotConverged&) {
                return kFailed;
            } catch (const SingularHessian&) {
                return kFailed;
            }
            total += rmse(f.test_y, predict(fit, f.test));
        }
        return total / static_cast<double>(folds.size());
    };

    StepwiseTrace trace;
    std::vector<std::size_t> selected;
    double incumbent = cv_rmse(selected);
    trace.baseline_rmse = incumbent;
    std::vector<char> used(ds.cols(), 0);

    for (;;) {
        if (selected.size() >= max_steps) {
            trace.stop_reason = StopReason::MaxSteps;
            break;
        }
        // Intercept plus the new column must not outnumber the training rows.
        if (selected.size() + 2 > min_train) {
            trace.stop_reason = StopReason::RankDeficient;
            break;
        }
        std::vector<std::size_t> candidates;
        for (std::size_t c = 0; c < ds.cols(); ++c)
            if (!used[c]) candidates.push_back(c);
        if (candidates.empty()) {
            trace.stop_reason = StopReason::RankDeficient;
            break;
        }
        std::vector<double> scores(candidates.size(), kFailed);
        parallel_for(candidates.size(), [&](std::size_t i) {
            auto active = selected;
            active.push_back(candidates[i]);
            scores[i] = cv_rmse(active);
        });
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] < scores[best]) best = i;
        if (!(scores[best] < incumbent)) {
            trace.stop_reason = StopReason::NoImprovement;
            break;
        }
        selected.push_back(candidates[best]);
        used[candidates[best]] = 1;
        incumbent = scores[best];
        trace.steps.emplace_back(candidates[best], incumbent);
    }

    FitResult fit = fit_mle(standardize(ds), selected, cfg);
    fit.method = Method::ForwardStepwise;
    fit.df = static_cast<double>(fit.nonzero_count());
    return {std::move(fit), std::move(trace)};
}

}  // namespace msk
