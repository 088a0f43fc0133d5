#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "msk/ingest.hpp"
#include "msk/selection.hpp"
#include "support.hpp"

using namespace msk;
using testkit::make_dataset;
using testkit::random_logistic;

namespace {

Edge drive(const std::string& seg, const std::string& t, const std::string& h) {
    return Edge{seg, t, h, 1.0, Mode::Driving, {}};
}

NetworkGraph graph_of(std::vector<std::string> nodes, std::vector<Edge> edges,
                      std::vector<std::string> origins, std::vector<std::string> dests) {
    NetworkGraph g{std::move(nodes), std::move(edges), std::move(origins), std::move(dests)};
    g.validate();
    return g;
}

// o -> a -> b -> d
NetworkGraph chain() {
    return graph_of({"o", "a", "b", "d"}, {drive("s0", "o", "a"), drive("s1", "a", "b"), drive("s2", "b", "d")},
                    {"o"}, {"d"});
}

// o -> {a, b} -> d, with a transit edge that must be ignored.
NetworkGraph diamond() {
    auto g = graph_of({"o", "a", "b", "d"},
                      {drive("oa", "o", "a"), drive("ob", "o", "b"), drive("ad", "a", "d"),
                       drive("bd", "b", "d")},
                      {"o"}, {"d"});
    g.edges.push_back(Edge{"rail", "o", "d", 3.0, Mode::Transit, {}});
    return g;
}

// Nodes 0..n-1 with edges only from lower to higher index.
NetworkGraph random_dag(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nn(2, 8);
    const int n = nn(rng);
    std::vector<std::string> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(i));
    std::vector<std::pair<int, int>> possible;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) possible.emplace_back(i, j);
    std::shuffle(possible.begin(), possible.end(), rng);
    std::uniform_int_distribution<std::size_t> ne(1, std::min<std::size_t>(12, possible.size()));
    possible.resize(ne(rng));
    std::vector<Edge> edges;
    for (std::size_t e = 0; e < possible.size(); ++e)
        edges.push_back(drive("e" + std::to_string(e), nodes[possible[e].first], nodes[possible[e].second]));
    // Each node independently origin, destination or neither.
    std::vector<std::string> origins, dests;
    std::uniform_int_distribution<int> role(0, 2);
    for (const auto& v : nodes) {
        const int r = role(rng);
        if (r == 0) origins.push_back(v);
        if (r == 1) dests.push_back(v);
    }
    return graph_of(nodes, edges, origins, dests);
}

// Dataset whose columns are (segment j, lag l) for n segments and lags 0..p.
Dataset lagged_dataset(std::size_t n, int p) {
    Dataset ds;
    ds.hour_label = "08:00";
    ds.lags = LagSpec{p, 10};
    ds.x = Matrix(3, n * static_cast<std::size_t>(p + 1), 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        ds.segment_labels.push_back("s" + std::to_string(j));
        for (int l = 0; l <= p; ++l) ds.column_map.push_back({j, l});
    }
    ds.q_drive = {1, 2, 3};
    ds.q_transit = {3, 2, 1};
    return ds;
}

}  // namespace

TEST(Betweenness, ChainCountsOneRouteEverywhere) {
    EXPECT_EQ(betweenness_centrality(chain()), (std::vector<std::uint64_t>{1, 1, 1}));
}

TEST(Betweenness, DiamondSplitsRoutes) {
    const auto c = betweenness_centrality(diamond());
    EXPECT_EQ(c, (std::vector<std::uint64_t>{1, 1, 1, 1}));
    // Add a second origin feeding o: every segment now carries two routes.
    auto g = diamond();
    g.nodes.push_back("p");
    g.origins.push_back("p");
    g.edges.insert(g.edges.begin(), drive("po", "p", "o"));
    EXPECT_EQ(betweenness_centrality(g), (std::vector<std::uint64_t>{2, 2, 2, 2, 2}));
}

TEST(Betweenness, IntermediateDestinationsCount) {
    // o -> a -> d with a also a destination: route o->a counts for s0 too.
    auto g = graph_of({"o", "a", "d"}, {drive("s0", "o", "a"), drive("s1", "a", "d")}, {"o"}, {"a", "d"});
    EXPECT_EQ(betweenness_centrality(g), (std::vector<std::uint64_t>{2, 1}));
    EXPECT_EQ(betweenness_by_enumeration(g), (std::vector<std::uint64_t>{2, 1}));
}

TEST(Betweenness, CycleRejectedUnlessEnumerationAllowed) {
    auto g = graph_of({"o", "a", "b", "d"},
                      {drive("oa", "o", "a"), drive("ab", "a", "b"), drive("ba", "b", "a"), drive("bd", "b", "d")},
                      {"o"}, {"d"});
    EXPECT_THROW(betweenness_centrality(g), CyclicGraph);
    BetweennessOptions opts;
    opts.allow_cycle_enumeration = true;
    // Simple paths only: o-a-b-d is the single route; b->a is never usable.
    EXPECT_EQ(betweenness_centrality(g, opts), (std::vector<std::uint64_t>{1, 1, 0, 1}));
}

TEST(Betweenness, DynamicProgramMatchesEnumerationOnRandomDags) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = random_dag(rng);
        EXPECT_EQ(betweenness_centrality(g), betweenness_by_enumeration(g)) << "trial " << trial;
    }
}

TEST(Betweenness, EnumerationRespectsCap) {
    // Ladder of k diamonds has 2^k routes.
    std::vector<std::string> nodes{"v0"};
    std::vector<Edge> edges;
    for (int k = 0; k < 12; ++k) {
        const std::string a = "v" + std::to_string(k), b = "v" + std::to_string(k + 1);
        const std::string up = "u" + std::to_string(k), dn = "w" + std::to_string(k);
        nodes.insert(nodes.end(), {up, dn, b});
        edges.push_back(drive(a + up, a, up));
        edges.push_back(drive(a + dn, a, dn));
        edges.push_back(drive(up + b, up, b));
        edges.push_back(drive(dn + b, dn, b));
    }
    auto g = graph_of(nodes, edges, {"v0"}, {"v12"});
    EXPECT_EQ(betweenness_centrality(g).front(), 2048u);
    EXPECT_THROW(betweenness_by_enumeration(g, 100), Error);
}

TEST(SelectByBetweenness, ThresholdAndLag) {
    const auto ds = lagged_dataset(4, 2);
    const std::vector<std::uint64_t> c{5, 1, 7, 3};
    // Columns for (j, lag 1) are 1, 4, 7, 10.
    EXPECT_EQ(select_by_betweenness(c, ds, 4, 1), (std::vector<std::size_t>{1, 7}));
    EXPECT_EQ(select_by_betweenness(c, ds, 0, 0), (std::vector<std::size_t>{0, 3, 6, 9}));
    EXPECT_EQ(select_by_betweenness(c, ds, 7, 2), (std::vector<std::size_t>{8}));
    EXPECT_THROW(select_by_betweenness(c, ds, 8, 0), EmptySelection);
    EXPECT_THROW(select_by_betweenness(c, ds, 1, 3), Error);
    EXPECT_THROW(select_by_betweenness(c, ds, 1, -1), Error);
}

TEST(SelectByBetweenness, SelectionShrinksAsThresholdRises) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint64_t> u(0, 50);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ds = lagged_dataset(10, 1);
        std::vector<std::uint64_t> c(10);
        for (auto& v : c) v = u(rng);
        std::size_t prev = ds.cols();
        for (std::int64_t t = 0; t <= 50; ++t) {
            std::size_t n = 0;
            try {
                n = select_by_betweenness(c, ds, t, 1).size();
            } catch (const EmptySelection&) {
            }
            EXPECT_LE(n, prev);
            prev = n;
        }
    }
}

TEST(AverageSpeed, MeansOverTheHourOnly) {
    const auto g = chain();
    RawTravelTimeTable t;
    auto row = [](std::string day, std::string seg, int start, std::optional<double> v) {
        return TravelTimeRow{std::move(day), std::move(seg), start, v, 1.0};
    };
    t.rows = {row("2019-01-07", "s0", 480, 60.0), row("2019-01-07", "s0", 530, 40.0),
              row("2019-01-08", "s0", 500, 50.0), row("2019-01-07", "s0", 540, 5.0),   // 09:00, outside
              row("2019-01-07", "s0", 470, 5.0),                                       // 07:50, outside
              row("2019-01-07", "s1", 480, 30.0), row("2019-01-07", "s1", 490, std::nullopt),
              row("2019-01-07", "s2", 480, 70.0), row("2019-01-07", "unknown", 480, 1.0)};
    const auto v = average_speed(t, g, "08:00");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_DOUBLE_EQ(v[0], 50.0);
    EXPECT_DOUBLE_EQ(v[1], 30.0);
    EXPECT_DOUBLE_EQ(v[2], 70.0);
    EXPECT_THROW(average_speed(t, g, "12:00"), MissingHour);
    t.rows.erase(t.rows.begin() + 7);
    EXPECT_THROW(average_speed(t, g, "08:00"), MissingSegmentData);
}

TEST(SelectBySpeed, ThresholdIsInclusive) {
    const auto ds = lagged_dataset(3, 1);
    const std::vector<double> v{30.0, 55.0, 65.0};
    EXPECT_EQ(select_by_speed(v, ds, 55.0, 0), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(select_by_speed(v, ds, 100.0, 1), (std::vector<std::size_t>{1, 3, 5}));
    EXPECT_THROW(select_by_speed(v, ds, 10.0, 0), EmptySelection);
    EXPECT_THROW(select_by_speed(v, ds, 10.0, 2), Error);
}

TEST(Stepwise, PicksTheSignalColumnFirst) {
    std::mt19937_64 rng(7);
    auto ds = random_logistic(rng, 60, 8, 0.2, {0.0, 0.0, 0.0, 1.0}, 2000);
    const auto plan = make_folds(ds.rows(), 5, 3);
    const auto [fit, trace] = forward_stepwise(ds, {}, plan, 5);
    ASSERT_FALSE(trace.steps.empty());
    EXPECT_EQ(trace.steps.front().first, 3u);
    EXPECT_LT(trace.steps.front().second, trace.baseline_rmse);
    EXPECT_EQ(fit.method, Method::ForwardStepwise);
    EXPECT_EQ(fit.coefficients.size(), ds.cols());
    EXPECT_NE(fit.coefficients[3], 0.0);
    EXPECT_EQ(fit.df, static_cast<double>(fit.nonzero_count()));
}

TEST(Stepwise, StopsAtMaxSteps) {
    std::mt19937_64 rng(8);
    auto ds = random_logistic(rng, 50, 6, 0.0, {1.0, -1.0, 0.8, -0.6, 0.5, 0.4}, 5000);
    const auto plan = make_folds(ds.rows(), 5, 1);
    const auto [fit, trace] = forward_stepwise(ds, {}, plan, 2);
    EXPECT_EQ(trace.steps.size(), 2u);
    EXPECT_EQ(trace.stop_reason, StopReason::MaxSteps);
    EXPECT_EQ(fit.nonzero_count(), 2u);
}

TEST(Stepwise, PureNoiseStopsEarly) {
    std::mt19937_64 rng(9);
    auto ds = random_logistic(rng, 40, 4, 0.0, {}, 100);
    const auto plan = make_folds(ds.rows(), 5, 1);
    const auto [fit, trace] = forward_stepwise(ds, {}, plan, 10);
    EXPECT_LT(trace.steps.size(), 4u);
    EXPECT_EQ(trace.stop_reason, StopReason::NoImprovement);
}

TEST(Stepwise, TraceIsStrictlyDecreasingAndDistinct) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto ds = random_logistic(rng, 40, 6, normal(rng), {normal(rng), normal(rng), normal(rng)}, 500);
        const auto plan = make_folds(ds.rows(), 5, static_cast<std::uint64_t>(trial));
        const auto [fit, trace] = forward_stepwise(ds, {}, plan, 6);
        double prev = trace.baseline_rmse;
        std::set<std::size_t> seen;
        for (const auto& [col, r] : trace.steps) {
            EXPECT_LT(r, prev);
            prev = r;
            EXPECT_TRUE(seen.insert(col).second);
        }
    }
}

TEST(StopReason, Names) {
    EXPECT_EQ(to_string(StopReason::NoImprovement), "no_improvement");
    EXPECT_EQ(to_string(StopReason::RankDeficient), "rank_deficient");
    EXPECT_EQ(to_string(StopReason::MaxSteps), "max_steps");
}
