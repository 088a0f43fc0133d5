#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "msk/eval.hpp"
#include "msk/ingest.hpp"
#include "msk/types.hpp"

namespace msk {

struct BetweennessOptions {
    // Enumerate simple paths when the driving graph has a cycle.
    bool allow_cycle_enumeration = false;
    std::uint64_t path_cap = 1'000'000;
};

/// Number of origin-to-destination routes through each driving segment,
/// indexed by driving-segment index. On a DAG:
///   count(u->v) = (#routes origins->u) * (#routes v->destinations).
std::vector<std::uint64_t> betweenness_centrality(const NetworkGraph& graph,
                                                  const BetweennessOptions& opts = {});

/// Reference counts by explicit simple-path enumeration.
std::vector<std::uint64_t> betweenness_by_enumeration(const NetworkGraph& graph,
                                                      std::uint64_t path_cap = 1'000'000);

/// Columns (j, lag_kb) for segments with centrality >= threshold_b.
std::vector<std::size_t> select_by_betweenness(std::span<const std::uint64_t> centrality,
                                               const Dataset& ds, std::int64_t threshold_b,
                                               int lag_kb);
std::vector<std::size_t> select_by_betweenness(const NetworkGraph& graph, const Dataset& ds,
                                               std::int64_t threshold_b, int lag_kb);

/// Mean recorded speed per driving segment over every day and interval
/// starting inside [hour, hour + 60 min).
std::vector<double> average_speed(const RawTravelTimeTable& travel, const NetworkGraph& graph,
                                  const std::string& hour);

/// Columns (j, lag_kv) for segments with average speed <= threshold_v.
std::vector<std::size_t> select_by_speed(std::span<const double> speeds, const Dataset& ds,
                                         double threshold_v, int lag_kv);

enum class StopReason { NoImprovement, RankDeficient, MaxSteps };
std::string to_string(StopReason r);

struct StepwiseTrace {
    std::vector<std::pair<std::size_t, double>> steps;  // (column, cv rmse)
    double baseline_rmse = 0.0;                         // constant model
    StopReason stop_reason = StopReason::NoImprovement;
};

/// Greedy forward selection by mean CV RMSE over a fixed fold plan. The
/// returned fit is refit on the whole (standardized) dataset.
std::pair<FitResult, StepwiseTrace> forward_stepwise(const Dataset& ds, const SolverConfig& cfg,
                                                     const FoldPlan& plan, std::size_t max_steps);

}  // namespace msk
