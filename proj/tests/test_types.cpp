#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "msk/serialize.hpp"
#include "msk/types.hpp"
#include "support.hpp"

using namespace msk;

TEST(DrivingFraction, DirectRatio) {
    const std::vector<std::int64_t> q1{3}, q0{1};
    EXPECT_DOUBLE_EQ(driving_fraction(q1, q0).y[0], 0.75);
}

TEST(DrivingFraction, BoundaryIsStoredAndFlagged) {
    const std::vector<std::int64_t> q1{0, 2}, q0{5, 2};
    const auto f = driving_fraction(q1, q0);
    EXPECT_EQ(f.y[0], 0.0);
    ASSERT_EQ(f.boundary_days.size(), 1u);
    EXPECT_EQ(f.boundary_days[0], 0u);
}

TEST(DrivingFraction, ZeroTotalThrows) {
    const std::vector<std::int64_t> q1{4, 0}, q0{1, 0};
    try {
        driving_fraction(q1, q0);
        FAIL() << "expected ZeroTotalFlow";
    } catch (const ZeroTotalFlow& e) {
        EXPECT_EQ(e.day(), 1u);
    }
}

TEST(DrivingFraction, LengthMismatch) {
    const std::vector<std::int64_t> q1{1, 2}, q0{1};
    EXPECT_THROW(driving_fraction(q1, q0), DimensionMismatch);
}

TEST(DrivingFraction, RoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> count(0, 1'000'000);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::int64_t> q1{count(rng)}, q0{count(rng)};
        if (q1[0] + q0[0] == 0) q0[0] = 1;
        const double y = driving_fraction(q1, q0).y[0];
        EXPECT_NEAR(y * static_cast<double>(q1[0] + q0[0]), static_cast<double>(q1[0]), 1e-12 * (1.0 + q1[0]));
    }
}

TEST(LagSpec, Validation) {
    EXPECT_NO_THROW((LagSpec{6, 10}.validate()));
    EXPECT_NO_THROW((LagSpec{0, 10}.validate()));
    EXPECT_THROW((LagSpec{-1, 10}.validate()), Error);
    EXPECT_THROW((LagSpec{6, 0}.validate()), Error);
    EXPECT_EQ((LagSpec{6, 10}.horizon_minutes()), 60);
}

TEST(Dataset, ValidateCatchesBrokenInvariants) {
    auto ds = testkit::make_dataset(Matrix(2, 2, 1.0), {1, 1}, {1, 1});
    EXPECT_NO_THROW(ds.validate());
    auto dup = ds;
    dup.column_map[1] = dup.column_map[0];
    EXPECT_THROW(dup.validate(), Error);
    auto zero = ds;
    zero.q_drive[1] = 0;
    zero.q_transit[1] = 0;
    EXPECT_THROW(zero.validate(), ZeroTotalFlow);
    auto shortq = ds;
    shortq.q_drive.pop_back();
    EXPECT_THROW(shortq.validate(), DimensionMismatch);
}

TEST(Dataset, ColumnLookupAndRowSelection) {
    Matrix x(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t d = 0; d < 2; ++d) x(i, d) = 10.0 * i + d;
    auto ds = testkit::make_dataset(x, {1, 2, 3}, {3, 2, 1});
    EXPECT_EQ(ds.column_of({1, 0}), std::optional<std::size_t>(1));
    EXPECT_FALSE(ds.column_of({5, 0}).has_value());
    const std::vector<std::size_t> rows{2, 0};
    const auto sub = ds.select_rows(rows);
    EXPECT_EQ(sub.rows(), 2u);
    EXPECT_EQ(sub.x(0, 1), 21.0);
    EXPECT_EQ(sub.q_drive[1], 1);
}

TEST(Method, NamesRoundTrip) {
    for (Method m : {Method::Mle, Method::Lasso, Method::Ridge, Method::ForwardStepwise,
                     Method::BetweennessSelect, Method::SpeedSelect})
        EXPECT_EQ(method_from_string(to_string(m)), m);
    EXPECT_THROW(method_from_string("elastic-net"), Error);
}

TEST(FitResult, DestandardizeMatchesRawPredictor) {
    FitResult fit;
    fit.intercept = 0.3;
    fit.coefficients = {0.5, -2.0};
    Standardization st{{1.0, -4.0}, {2.0, 0.5}};
    const auto raw = fit.destandardize(st);
    const double x0 = 3.0, x1 = -3.5;
    const double eta_std = 0.3 + 0.5 * (x0 - 1.0) / 2.0 - 2.0 * (x1 + 4.0) / 0.5;
    const double eta_raw = raw.intercept + raw.coefficients[0] * x0 + raw.coefficients[1] * x1;
    EXPECT_NEAR(eta_std, eta_raw, 1e-14);
    EXPECT_EQ(fit.nonzero_count(), 2u);
}

TEST(Sigmoid, StableAtExtremes) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_TRUE(std::isfinite(sigmoid(1e4)));
    EXPECT_TRUE(std::isfinite(sigmoid(-1e4)));
    EXPECT_NEAR(logit(sigmoid(2.5)), 2.5, 1e-12);
}

TEST(Serialization, DatasetRoundTripIsBitExact) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1e3);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x(7, 5);
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t d = 0; d < 5; ++d) x(i, d) = normal(rng) / 3.0;
        auto ds = testkit::make_dataset(x, {1, 2, 3, 4, 5, 6, 7}, {7, 6, 5, 4, 3, 2, 1});
        ds.column_map = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}};
        ds.lags = LagSpec{1, 10};
        ds.segment_labels = {"a", "b", "c"};
        const auto text = to_json(ds).dump();
        const auto back = dataset_from_json(nlohmann::json::parse(text));
        EXPECT_TRUE(back.x == ds.x);
        EXPECT_EQ(back.q_drive, ds.q_drive);
        EXPECT_EQ(back.q_transit, ds.q_transit);
        EXPECT_EQ(back.column_map, ds.column_map);
    }
}

TEST(Serialization, RejectsUnknownVersion) {
    const auto dir = testkit::temp_dir("version");
    write_json(dir / "a.json", {{"x", 1}});
    EXPECT_NO_THROW(read_json(dir / "a.json"));
    std::ofstream(dir / "b.json") << R"({"spec_version": "99", "x": 1})";
    EXPECT_THROW(read_json(dir / "b.json"), VersionError);
    std::ofstream(dir / "c.json") << R"({"x": 1})";
    EXPECT_THROW(read_json(dir / "c.json"), VersionError);
    std::filesystem::remove_all(dir);
}

TEST(Serialization, FitRoundTrip) {
    FitResult fit;
    fit.intercept = -0.125;
    fit.coefficients = {0.0, 1.0 / 3.0};
    fit.method = Method::SpeedSelect;
    fit.hyper.threshold_v = 42.5;
    fit.hyper.lag_kv = 3;
    fit.df = 1;
    fit.converged = true;
    fit.iterations = 7;
    const auto back = fit_from_json(nlohmann::json::parse(to_json(fit).dump()));
    EXPECT_EQ(back.coefficients, fit.coefficients);
    EXPECT_EQ(back.hyper, fit.hyper);
    EXPECT_EQ(back.method, fit.method);
    EXPECT_EQ(back.intercept, fit.intercept);
}
