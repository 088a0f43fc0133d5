#pragma once

#include <span>
#include <vector>

#include "msk/types.hpp"

namespace msk {

struct SolverConfig {
    int max_iterations = 500;
    // Converged when ||grad||_inf <= tolerance * max(1, |objective|).
    double gradient_tolerance = 1e-8;
    double step_shrink = 0.5;
    double min_step = 1e-12;

    void validate() const;
};

/// Raised when the solver stops without meeting the gradient criterion.
/// Carries the best iterate seen.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
    const FitResult& best() const noexcept { return best_; }

private:
    FitResult best_;
};

/// Weighted binomial log-likelihood
///   sum_i q1_i log s(eta_i) + q0_i log(1 - s(eta_i)),  eta_i = b0 + beta . x_i
/// evaluated through log-sigmoid so large |eta| never overflows.
double log_likelihood(double intercept, std::span<const double> coefficients, const Dataset& ds);

struct Gradient {
    double intercept = 0.0;
    std::vector<double> coefficients;
};

Gradient log_likelihood_gradient(double intercept, std::span<const double> coefficients,
                                 const Dataset& ds);

std::vector<double> linear_predictor(double intercept, std::span<const double> coefficients,
                                     const Dataset& ds);
std::vector<double> linear_predictor(const FitResult& fit, const Dataset& ds);

/// Unpenalized fit with every column outside `active_columns` held at zero.
FitResult fit_mle(const Dataset& ds, std::span<const std::size_t> active_columns,
                  const SolverConfig& cfg = {});

/// Maximizes l - lambda * ||beta||_2^2; the intercept is not penalized.
FitResult fit_ridge(const Dataset& ds, double lambda, const SolverConfig& cfg = {});

/// Maximizes l - lambda * ||beta||_1 by IRLS with cyclic soft-thresholding
/// on each quadratic model. `warm_start` may seed the iterate.
FitResult fit_lasso(const Dataset& ds, double lambda, const SolverConfig& cfg = {},
                    const FitResult* warm_start = nullptr);

/// Smallest lambda at which the lasso solution is all zeros: the largest
/// absolute gradient coordinate at the intercept-only optimum.
double lambda_max(const Dataset& ds);

/// Fitted driving fractions, kept strictly inside (0, 1).
std::vector<double> predict(const FitResult& fit, const Dataset& ds);

/// Trace(X (X'X + lambda I)^-1 X') = sum_d s_d^2 / (s_d^2 + lambda) over the
/// singular values of X. At lambda = 0 this is the numerical rank.
double effective_df_ridge(const Dataset& ds, double lambda);
double effective_df_ridge(const Matrix& x, double lambda);

}  // namespace msk
