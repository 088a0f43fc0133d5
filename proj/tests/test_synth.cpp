#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "msk/glm.hpp"
#include "msk/ingest.hpp"
#include "msk/selection.hpp"
#include "msk/synth.hpp"

using namespace msk;

TEST(Weekdays, SkipsWeekends) {
    const auto d = synth::weekdays("2019-01-04", 4);  // a Friday
    EXPECT_EQ(d, (std::vector<std::string>{"2019-01-04", "2019-01-07", "2019-01-08", "2019-01-09"}));
    const auto leap = synth::weekdays("2020-02-27", 3);
    EXPECT_EQ(leap, (std::vector<std::string>{"2020-02-27", "2020-02-28", "2020-03-02"}));
    EXPECT_EQ(synth::weekdays("2019-01-07", 130).size(), 130u);
    EXPECT_THROW(synth::weekdays("2019-13-01", 1), Error);
}

TEST(Network, ShapeAndRoutes) {
    for (std::size_t n : {3u, 10u, 158u}) {
        const auto g = synth::make_network(n, 5);
        EXPECT_EQ(g.driving_edges().size(), n);
        EXPECT_EQ(g.destinations, (std::vector<std::string>{"bridge"}));
        // Acyclic, and every driving segment carries at least one route.
        const auto c = betweenness_centrality(g);
        for (auto v : c) EXPECT_GT(v, 0u);
    }
    EXPECT_THROW(synth::make_network(2, 1), Error);
}

TEST(Network, TrunkCarriesEveryRoute) {
    const auto g = synth::make_network(12, 1);
    const auto c = betweenness_centrality(g);
    // Origins are the feeder nodes; the final trunk segment sees them all.
    EXPECT_EQ(c.back(), g.origins.size());
    EXPECT_EQ(*std::max_element(c.begin(), c.end()), c.back());
}

TEST(Generate, BayAreaDimensions) {
    synth::GeneratorConfig cfg;
    const auto sc = synth::generate_scenario(cfg);
    ASSERT_EQ(sc.datasets.size(), 1u);
    const auto& ds = sc.datasets.front();
    EXPECT_EQ(ds.rows(), 130u);
    EXPECT_EQ(ds.cols(), 1106u);
    EXPECT_EQ(ds.segment_count(), 158u);
    EXPECT_NO_THROW(ds.validate());
    const auto& truth = sc.truths.front();
    EXPECT_EQ(truth.support.size(), 8u);
    EXPECT_EQ(truth.beta.size(), 1106u);
    std::set<std::size_t> segs;
    for (auto c : truth.support) segs.insert(ds.column_map[c].segment);
    EXPECT_EQ(segs.size(), 8u);
    for (std::size_t i = 0; i < 130; ++i) EXPECT_EQ(ds.q_drive[i] + ds.q_transit[i], 10'000);
}

TEST(Generate, DeterministicAndSeedSensitive) {
    synth::GeneratorConfig cfg;
    cfg.days = 20;
    cfg.segments = 12;
    const auto a = synth::generate_scenario(cfg), b = synth::generate_scenario(cfg);
    EXPECT_EQ(a.datasets[0].x, b.datasets[0].x);
    EXPECT_EQ(a.datasets[0].q_drive, b.datasets[0].q_drive);
    cfg.seed = 2;
    const auto c = synth::generate_scenario(cfg);
    EXPECT_NE(a.datasets[0].x, c.datasets[0].x);
}

TEST(Generate, MultipleHoursShareTheTravelTable) {
    synth::GeneratorConfig cfg;
    cfg.days = 10;
    cfg.segments = 6;
    cfg.hours = {"09:00", "08:00"};
    const auto sc = synth::generate_scenario(cfg);
    ASSERT_EQ(sc.datasets.size(), 2u);
    EXPECT_EQ(sc.datasets[0].hour_label, "08:00");
    EXPECT_EQ(sc.datasets[1].hour_label, "09:00");
    // 08:00 lag 0 and 09:00 lag 6 are the same 08:00 interval.
    const std::size_t lags = 7;
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            EXPECT_EQ(sc.datasets[0].x(i, j * lags + 0), sc.datasets[1].x(i, j * lags + 6));
    EXPECT_EQ(sc.flows.rows.size(), 20u);
}

TEST(Generate, SpeedsMatchTravelTimes) {
    synth::GeneratorConfig cfg;
    cfg.days = 3;
    cfg.segments = 4;
    const auto sc = synth::generate_scenario(cfg);
    const auto driving = sc.graph.driving_edges();
    const auto& ds = sc.datasets[0];
    for (const auto& r : sc.travel.rows) {
        if (r.interval_start != 480) continue;
        const auto j = *sc.graph.driving_index(r.segment);
        const auto i = static_cast<std::size_t>(std::find(ds.days.begin(), ds.days.end(), r.day) - ds.days.begin());
        EXPECT_NEAR(60.0 * driving[j]->length_miles / *r.speed_mph, ds.x(i, j * 7), 1e-12);
    }
}

TEST(Generate, SignalDirectionFollowsTruth) {
    // A strong negative coefficient on one column: that column should
    // correlate negatively with the driving share.
    const auto [ds, truth] = synth::generate(3, 80, 6, LagSpec{2, 10}, {4}, {-1.0}, 10'000);
    EXPECT_EQ(truth.support, (std::vector<std::size_t>{4}));
    const auto y = driving_fraction(ds).y;
    const auto col = ds.x.column(4);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / 80, mx = std::accumulate(col.begin(), col.end(), 0.0) / 80;
    double sxy = 0;
    for (std::size_t i = 0; i < 80; ++i) sxy += (y[i] - my) * (col[i] - mx);
    EXPECT_LT(sxy, 0.0);
    EXPECT_THROW(synth::generate(3, 80, 6, LagSpec{2, 10}, {4}, {}, 100), Error);
    EXPECT_THROW(synth::generate(3, 80, 6, LagSpec{2, 10}, {18}, {1.0}, 100), Error);
}

TEST(Generate, RecoverableByMle) {
    const auto [raw, truth] = synth::generate(4, 130, 5, LagSpec{1, 10}, {2, 7}, {0.4, -0.3}, 10'000);
    const auto ds = standardize(raw);
    const auto fit = fit_mle(ds, std::vector<std::size_t>{2, 7});
    EXPECT_NEAR(fit.intercept, truth.intercept, 0.02);
    EXPECT_NEAR(fit.coefficients[2], 0.4, 0.03);
    EXPECT_NEAR(fit.coefficients[7], -0.3, 0.03);
}

TEST(BruteForce, FindsInterceptOnlyOptimum) {
    Dataset ds;
    ds.x = Matrix(2, 1, 0.0);
    ds.column_map = {{0, 0}};
    ds.segment_labels = {"s"};
    ds.q_drive = {30, 45};
    ds.q_transit = {70, 55};
    const auto r = synth::brute_force_logistic(ds, {}, 5.0, 0.05);
    EXPECT_NEAR(r.intercept, std::log(75.0 / 125.0), 5e-4);
    EXPECT_TRUE(r.coefficients.empty());
    EXPECT_THROW(synth::brute_force_logistic(ds, std::vector<std::size_t>{0, 0, 0}, 1, 0.1), Error);
    EXPECT_THROW(synth::brute_force_logistic(ds, {}, 1, 0.0), Error);
}

TEST(MixSeed, StreamsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4; ++s)
        for (std::uint64_t a = 0; a < 50; ++a) seen.insert(synth::mix_seed(1, s, a));
    EXPECT_EQ(seen.size(), 200u);
    EXPECT_EQ(synth::mix_seed(9, 1, 2, 3), synth::mix_seed(9, 1, 2, 3));
}
