#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msk/glm.hpp"
#include "msk/types.hpp"

namespace msk {

struct FoldPlan {
    int k = 5;
    std::vector<int> assignment;  // fold index per row
    std::uint64_t seed = 0;

    std::vector<std::size_t> train_rows(int fold) const;
    std::vector<std::size_t> test_rows(int fold) const;
};

/// Seeded uniform partition of m rows into k folds whose sizes differ by at
/// most one.
FoldPlan make_folds(std::size_t m, int k, std::uint64_t seed);

/// A method with every hyperparameter fixed. `active` is the column set for
/// the restricted fits (Mle, ForwardStepwise, BetweennessSelect, SpeedSelect).
struct MethodSpec {
    Method method = Method::Mle;
    Hyper hyper;
    std::vector<std::size_t> active;
};

/// Fits `spec` on an already standardized dataset.
FitResult fit_method(const Dataset& ds, const MethodSpec& spec, const SolverConfig& cfg = {},
                     const FitResult* warm_start = nullptr);

double rmse(std::span<const double> y, std::span<const double> yhat);
/// 1 - SSE / sum (y - mean(y))^2; nullopt when y has zero variance.
std::optional<double> out_of_sample_r2(std::span<const double> y, std::span<const double> yhat);

/// Training rows standardized on their own statistics, held-out rows with
/// the same (mean, scale).
struct FoldData {
    Dataset train;
    Dataset test;
    std::vector<double> test_y;
};

std::vector<FoldData> split_folds(const Dataset& ds, const FoldPlan& plan);

struct CvOutcome {
    CvReport report;
    std::vector<int> unconverged_folds;
    std::vector<FitResult> fits;  // one per fold
};

/// K-fold estimate of RMSE and out-of-sample R^2. A fold whose fit stops
/// short of the gradient criterion is scored with its best iterate and
/// listed in `unconverged_folds`.
CvOutcome cv_evaluate_detailed(const Dataset& ds, const MethodSpec& spec, const FoldPlan& plan,
                               const SolverConfig& cfg = {},
                               std::span<const FoldData> folds = {},
                               std::span<const FitResult> warm = {});
CvReport cv_evaluate(const Dataset& ds, const MethodSpec& spec, const FoldPlan& plan,
                     const SolverConfig& cfg = {});

struct GridResult {
    std::size_t best_index = 0;
    MethodSpec best;
    std::vector<CvReport> reports;
};

/// Regularization strength used to break RMSE ties: larger is stronger.
double regularization_strength(const MethodSpec& spec);

/// Evaluates every grid point on the same folds and returns the lowest mean
/// RMSE, ties going to the stronger regularization.
GridResult grid_search(const Dataset& ds, std::span<const MethodSpec> grid, const FoldPlan& plan,
                       const SolverConfig& cfg = {});

std::vector<double> log_grid(double lo, double hi, std::size_t points);
/// 20 log-spaced values over [1e-4, 1] * lambda_max of the standardized data.
std::vector<MethodSpec> default_lasso_grid(const Dataset& ds, std::size_t points = 20);
/// 20 log-spaced values over [1e-4, 1e6].
std::vector<MethodSpec> default_ridge_grid(std::size_t points = 20);

}  // namespace msk
