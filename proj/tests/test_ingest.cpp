#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "msk/ingest.hpp"
#include "msk/synth.hpp"
#include "support.hpp"

using namespace msk;

namespace {

// o -s1-> a -s2-> b -s3-> d, plus an isolated driving segment x -iso-> y and
// a transit line.
NetworkGraph chain_network() {
    NetworkGraph g;
    g.nodes = {"o", "a", "b", "d", "x", "y"};
    g.edges = {{"s1", "o", "a", 1.0, Mode::Driving, ""},
               {"s2", "a", "b", 2.0, Mode::Driving, ""},
               {"s3", "b", "d", 1.5, Mode::Driving, ""},
               {"iso", "x", "y", 1.0, Mode::Driving, ""},
               {"rail", "o", "d", 5.0, Mode::Transit, ""}};
    g.origins = {"o", "x"};
    g.destinations = {"d", "y"};
    return g;
}

TravelTimeRow reading(std::string day, std::string seg, const char* clock, std::optional<double> speed) {
    return {std::move(day), std::move(seg), parse_clock(clock), speed, 1.0};
}

std::optional<double> speed_of(const RawTravelTimeTable& t, const std::string& seg, const std::string& day) {
    for (const auto& r : t.rows)
        if (r.segment == seg && r.day == day) return r.speed_mph;
    return std::nullopt;
}

}  // namespace

TEST(Clock, ParseAndFormat) {
    EXPECT_EQ(parse_clock("08:00"), 480);
    EXPECT_EQ(parse_clock("23:55"), 1435);
    EXPECT_EQ(format_clock(485), "08:05");
    EXPECT_THROW(parse_clock("8h"), Error);
    EXPECT_THROW(parse_clock("24:00"), Error);
    EXPECT_TRUE(is_iso_date("2019-03-04"));
    EXPECT_FALSE(is_iso_date("2019-13-04"));
    EXPECT_FALSE(is_iso_date("03/04/2019"));
}

TEST(TravelTimes, HealthBelowThresholdClearsSpeed) {
    std::istringstream in(
        "day,segment,interval_start,avg_speed_mph,health\n"
        "2019-01-07,s1,07:00,55.5,0.75\n"
        "2019-01-07,s2,07:00,61,1.0\n"
        "2019-01-07,s3,07:00,48,\n");
    const auto t = parse_travel_times(in, 0.8);
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_FALSE(t.rows[0].speed_mph.has_value());
    EXPECT_EQ(t.rows[1].speed_mph, std::optional<double>(61.0));
    EXPECT_EQ(t.rows[2].speed_mph, std::optional<double>(48.0));
}

TEST(TravelTimes, MalformedFieldReportsLine) {
    std::istringstream in(
        "day,segment,interval_start,avg_speed_mph,health\n"
        "2019-01-07,s1,07:00,55.5,1\n"
        "2019-01-07,s2,07:00,fast,1\n");
    try {
        parse_travel_times(in, 0.8);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(TravelTimes, HeaderMismatchAndDuplicates) {
    std::istringstream bad("day,segment,start,speed,health\n");
    EXPECT_THROW(parse_travel_times(bad, 0.8), SchemaError);
    std::istringstream dup(
        "day,segment,interval_start,avg_speed_mph,health\n"
        "2019-01-07,s1,07:00,55.5,1\n"
        "2019-01-07,s1,07:00,56,1\n");
    EXPECT_THROW(parse_travel_times(dup, 0.8), ParseError);
}

TEST(Flows, ParseAndValidate) {
    std::istringstream in("day,hour,q_drive,q_transit\n2019-01-07,08:00,300,100\n");
    const auto f = parse_flows(in);
    ASSERT_EQ(f.rows.size(), 1u);
    EXPECT_EQ(f.rows[0].q_drive, 300);
    std::istringstream neg("day,hour,q_drive,q_transit\n2019-01-07,08:00,-1,100\n");
    EXPECT_THROW(parse_flows(neg), ParseError);
    std::istringstream hdr("day,q_drive,q_transit\n");
    EXPECT_THROW(parse_flows(hdr), SchemaError);
}

TEST(ExcludeDays, CommentsAndBlanks) {
    std::istringstream in("# incidents\n2019-01-08\n\n2019-02-01  # crash\n");
    const auto days = parse_exclude_days(in);
    EXPECT_EQ(days, (std::set<std::string>{"2019-01-08", "2019-02-01"}));
    std::istringstream bad("yesterday\n");
    EXPECT_THROW(parse_exclude_days(bad), ParseError);
}

TEST(Network, JsonRoundTrip) {
    const auto g = chain_network();
    const auto dir = testkit::temp_dir("net");
    write_network(dir / "network.json", g);
    const auto back = load_network(dir / "network.json");
    ASSERT_EQ(back.edges.size(), g.edges.size());
    EXPECT_EQ(back.edges[4].mode, Mode::Transit);
    EXPECT_EQ(back.driving_edges().size(), 4u);
    EXPECT_THROW(parse_network("{\"nodes\": [\"a\"]}"), SchemaError);
    std::filesystem::remove_all(dir);
}

TEST(Network, OriginsAndDestinationsDisjoint) {
    auto g = chain_network();
    g.destinations.push_back("o");
    EXPECT_THROW(g.validate(), SchemaError);
}

TEST(Impute, TwoSidedMean) {
    RawTravelTimeTable t;
    t.rows = {reading("2019-01-07", "s1", "07:00", 60.0), reading("2019-01-07", "s2", "07:00", std::nullopt),
              reading("2019-01-07", "s3", "07:00", 40.0)};
    const auto r = impute_missing_speeds(t, chain_network());
    EXPECT_EQ(speed_of(r.table, "s2", "2019-01-07"), std::optional<double>(50.0));
    EXPECT_EQ(r.imputed, 1u);
    EXPECT_TRUE(r.dropped.empty());
}

TEST(Impute, OneSidedFallback) {
    RawTravelTimeTable t;
    t.rows = {reading("2019-01-07", "s1", "07:00", std::nullopt), reading("2019-01-07", "s2", "07:00", std::nullopt),
              reading("2019-01-07", "s3", "07:00", 40.0)};
    const auto r = impute_missing_speeds(t, chain_network());
    EXPECT_EQ(speed_of(r.table, "s2", "2019-01-07"), std::optional<double>(40.0));
    // s1 reaches s3 through the unobserved s2.
    EXPECT_EQ(speed_of(r.table, "s1", "2019-01-07"), std::optional<double>(40.0));
}

TEST(Impute, OnlySameDayAndIntervalCount) {
    RawTravelTimeTable t;
    t.rows = {reading("2019-01-07", "s1", "07:00", 60.0), reading("2019-01-07", "s2", "07:10", std::nullopt),
              reading("2019-01-08", "s3", "07:10", 40.0)};
    const auto r = impute_missing_speeds(t, chain_network());
    ASSERT_EQ(r.dropped.size(), 1u);
    EXPECT_EQ(r.dropped[0].segment, "s2");
}

TEST(Impute, AllMissingChainDayIsDropped) {
    // Day 2 of the chain has nothing observed: every row drops, day 1 stays.
    RawTravelTimeTable t;
    for (const char* s : {"s1", "s2", "s3"}) {
        t.rows.push_back(reading("2019-01-07", s, "07:00", 50.0));
        t.rows.push_back(reading("2019-01-08", s, "07:00", std::nullopt));
    }
    t.rows.push_back(reading("2019-01-07", "iso", "07:00", std::nullopt));
    const auto r = impute_missing_speeds(t, chain_network());
    EXPECT_EQ(r.dropped.size(), 4u);
    EXPECT_EQ(r.table.rows.size(), 3u);
    EXPECT_EQ(r.imputed, 0u);
}

TEST(Assemble, UnitConversionAndLagBuckets) {
    NetworkGraph g;
    g.nodes = {"o", "d"};
    g.edges = {{"s", "o", "d", 2.0, Mode::Driving, ""}};
    g.origins = {"o"};
    g.destinations = {"d"};
    RawTravelTimeTable t;
    // lag 0 bucket [08:00, 08:10); lag 1 bucket [07:50, 08:00) holds two readings.
    t.rows = {reading("2019-01-07", "s", "08:00", 60.0), reading("2019-01-07", "s", "07:50", 40.0),
              reading("2019-01-07", "s", "07:55", 80.0), reading("2019-01-07", "s", "07:40", 10.0)};
    RawFlowTable f;
    f.rows = {{"2019-01-07", "08:00", 3, 1}};
    const auto ds = assemble_dataset(t, f, g, "08:00", LagSpec{1, 10}, {});
    ASSERT_EQ(ds.rows(), 1u);
    ASSERT_EQ(ds.cols(), 2u);
    EXPECT_DOUBLE_EQ(ds.x(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(ds.x(0, 1), 2.0);  // mean speed 60 mph
    EXPECT_EQ(ds.column_map[1], (ColumnKey{0, 1}));
}

TEST(Assemble, ExclusionIncompleteDaysAndErrors) {
    const auto g = chain_network();
    RawTravelTimeTable t;
    RawFlowTable f;
    for (const char* day : {"2019-01-07", "2019-01-08", "2019-01-09"}) {
        for (const char* s : {"s1", "s2", "s3", "iso"}) t.rows.push_back(reading(day, s, "08:00", 55.0));
        f.rows.push_back({day, "08:00", 10, 5});
    }
    t.rows.erase(t.rows.begin() + 5);  // 2019-01-08 loses s2
    AssembleReport rep;
    const auto ds = assemble_dataset(t, f, g, "08:00", LagSpec{0, 10}, {"2019-01-09"}, &rep);
    EXPECT_EQ(ds.days, std::vector<std::string>{"2019-01-07"});
    EXPECT_EQ(rep.incomplete_days, std::vector<std::string>{"2019-01-08"});
    EXPECT_EQ(rep.excluded_days, std::vector<std::string>{"2019-01-09"});
    EXPECT_EQ(ds.cols(), 4u);  // transit carries no columns
    EXPECT_THROW(assemble_dataset(t, f, g, "09:00", LagSpec{0, 10}, {}), MissingHour);
    EXPECT_THROW(assemble_dataset(t, f, g, "08:00", LagSpec{0, 10}, {"2019-01-07", "2019-01-09"}),
                 EmptyDataset);
}

TEST(Assemble, BayAreaShapeThroughFiles) {
    synth::GeneratorConfig cfg;
    cfg.seed = 21;
    const auto sc = synth::generate_scenario(cfg);
    const auto dir = testkit::temp_dir("shape");
    write_travel_times(dir / "travel_times.csv", sc.travel);
    write_flows(dir / "flows.csv", sc.flows);
    write_network(dir / "network.json", sc.graph);

    const auto graph = load_network(dir / "network.json");
    const auto travel = impute_missing_speeds(load_travel_times(dir / "travel_times.csv", 0.8), graph).table;
    const auto flows = load_flows(dir / "flows.csv");
    const auto ds = assemble_dataset(travel, flows, graph, "08:00", LagSpec{6, 10}, {});
    EXPECT_EQ(ds.rows(), 130u);
    EXPECT_EQ(ds.cols(), 1106u);
    EXPECT_EQ(ds.segment_count(), 158u);
    const auto& ref = sc.datasets.front();
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        for (std::size_t c = 0; c < ds.cols(); ++c)
            worst = std::max(worst, std::abs(ds.x(i, c) - ref.x(i, c)) / ref.x(i, c));
    EXPECT_LT(worst, 1e-12);
    EXPECT_EQ(ds.q_drive, ref.q_drive);

    const auto again = assemble_dataset(travel, flows, graph, "08:00", LagSpec{6, 10}, {});
    EXPECT_TRUE(again.x == ds.x);
    std::filesystem::remove_all(dir);
}

TEST(Standardize, TwoPointColumn) {
    auto ds = testkit::make_dataset(Matrix(2, 1, std::vector<double>{1, 3}), {1, 1}, {1, 1});
    const auto z = standardize(ds);
    EXPECT_DOUBLE_EQ(z.x(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z.x(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(z.standardization->mean[0], 2.0);
    EXPECT_DOUBLE_EQ(z.standardization->scale[0], 1.0);
}

TEST(Standardize, ConstantColumn) {
    auto ds = testkit::make_dataset(Matrix(3, 1, 5.0), {1, 1, 1}, {1, 1, 1});
    const auto z = standardize(ds);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(z.x(i, 0), 0.0);
    EXPECT_EQ(z.standardization->scale[0], 1.0);
}

TEST(Standardize, MomentsAndIdempotence) {
    std::mt19937_64 rng(17);
    std::lognormal_distribution<double> ln(1.0, 0.7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 2 + rng() % 40, D = 1 + rng() % 8;
        Matrix x(m, D);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t d = 0; d < D; ++d) x(i, d) = 100.0 * ln(rng);
        auto ds = testkit::make_dataset(x, std::vector<std::int64_t>(m, 1), std::vector<std::int64_t>(m, 1));
        const auto z = standardize(ds);
        for (std::size_t d = 0; d < D; ++d) {
            double mean = 0, ss = 0;
            for (std::size_t i = 0; i < m; ++i) mean += z.x(i, d);
            mean /= m;
            for (std::size_t i = 0; i < m; ++i) ss += (z.x(i, d) - mean) * (z.x(i, d) - mean);
            EXPECT_NEAR(mean, 0.0, 1e-9);
            EXPECT_NEAR(std::sqrt(ss / m), 1.0, 1e-9);
        }
        const auto zz = standardize(z);
        for (std::size_t k = 0; k < zz.x.data().size(); ++k) EXPECT_NEAR(zz.x.data()[k], z.x.data()[k], 1e-9);
        // Composed statistics still map back to raw units.
        const auto& st = *zz.standardization;
        for (std::size_t d = 0; d < D; ++d)
            EXPECT_NEAR(zz.x(0, d) * st.scale[d] + st.mean[d], x(0, d), 1e-9 * (1 + std::abs(x(0, d))));
    }
}

TEST(Standardize, NeedsTwoRows) {
    auto ds = testkit::make_dataset(Matrix(1, 1, 5.0), {1}, {1});
    EXPECT_THROW(standardize(ds), Error);
}
