#pragma once

#include <span>
#include <utility>
#include <vector>

#include "msk/types.hpp"

namespace msk {

/// Population variance of the daily driving fraction (divisor m).
double variability(std::span<const double> y);
double variability(const DrivingFraction& y);

/// Pearson correlation. Throws ZeroVariance when either input is constant.
double pearson(std::span<const double> y, std::span<const double> x);

struct Responsiveness {
    double rho = 0.0;
    std::vector<double> per_segment;  // lag-averaged correlation per segment
    std::vector<double> per_column;   // correlation of every (segment, lag) column
    std::size_t constant_columns = 0; // counted as correlation 0
};

Responsiveness responsiveness(const Dataset& ds, const DrivingFraction& y);

/// Count of segments whose lag-averaged correlation is strictly below each
/// threshold. Thresholds must be ascending; they may be negative.
std::vector<std::pair<double, std::size_t>> g_curve(std::span<const double> per_segment,
                                                    std::span<const double> thresholds);

struct FTestResult {
    double f = 0.0;
    double dof_num = 0.0;  // nu - 1
    double dof_den = 0.0;  // m - nu
    double p_value = 1.0;
    double rss_null = 0.0;
    double rss_model = 0.0;
};

/// Logit-scale F-test of `fit` against the constant model. The model
/// residual uses the fit's linear predictor; nu = fit.df + 1 (intercept
/// included). `ds` must be on the scale the fit was trained on.
FTestResult f_test(const Dataset& ds, const FitResult& fit);

StatsReport build_stats_report(const Dataset& ds, const FitResult* fit,
                               std::span<const double> thresholds);

}  // namespace msk
