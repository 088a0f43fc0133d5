#include "msk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "msk/ingest.hpp"
#include "msk/parallel.hpp"

namespace msk {

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) rows.push_back(i);
    return rows;
}

FoldPlan make_folds(std::size_t m, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > m)
        throw BadFoldCount("fold count must satisfy 2 <= k <= m (k=" + std::to_string(k) +
                           ", m=" + std::to_string(m) + ")");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with an explicit engine so the permutation is fixed per seed.
    std::mt19937_64 rng(seed);
    for (std::size_t i = m; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.assign(m, 0);
    for (std::size_t pos = 0; pos < m; ++pos)
        plan.assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    return plan;
}

FitResult fit_method(const Dataset& ds, const MethodSpec& spec, const SolverConfig& cfg,
                     const FitResult* warm_start) {
    switch (spec.method) {
        case Method::Lasso:
            if (!spec.hyper.lambda) throw Error("lasso needs lambda");
            return fit_lasso(ds, *spec.hyper.lambda, cfg, warm_start);
        case Method::Ridge:
            if (!spec.hyper.lambda) throw Error("ridge needs lambda");
            return fit_ridge(ds, *spec.hyper.lambda, cfg);
        case Method::Mle:
        case Method::ForwardStepwise:
        case Method::BetweennessSelect:
        case Method::SpeedSelect: {
            FitResult r = fit_mle(ds, spec.active, cfg);
            r.method = spec.method;
            r.hyper = spec.hyper;
            if (spec.method != Method::Mle) r.df = static_cast<double>(r.nonzero_count());
            return r;
        }
    }
    throw Error("unhandled method");
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty()) throw DimensionMismatch("rmse needs equal nonempty vectors");
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(y.size()));
}

std::optional<double> out_of_sample_r2(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty()) throw DimensionMismatch("r2 needs equal nonempty vectors");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    if (sst == 0.0) return std::nullopt;
    return 1.0 - sse / sst;
}

std::vector<FoldData> split_folds(const Dataset& ds, const FoldPlan& plan) {
    if (plan.assignment.size() != ds.rows())
        throw DimensionMismatch("fold plan does not cover the dataset rows");
    std::vector<FoldData> folds(static_cast<std::size_t>(plan.k));
    for (int f = 0; f < plan.k; ++f) {
        const auto train_rows = plan.train_rows(f);
        const auto test_rows = plan.test_rows(f);
        if (test_rows.empty()) throw BadFoldCount("empty fold " + std::to_string(f));
        Dataset train_raw = ds.select_rows(train_rows);
        const Standardization st = compute_standardization(train_raw.x);
        auto& fd = folds[static_cast<std::size_t>(f)];
        fd.train = apply_standardization(train_raw, st);
        fd.test = apply_standardization(ds.select_rows(test_rows), st);
        fd.test_y = driving_fraction(fd.test).y;
    }
    return folds;
}

CvOutcome cv_evaluate_detailed(const Dataset& ds, const MethodSpec& spec, const FoldPlan& plan,
                               const SolverConfig& cfg, std::span<const FoldData> folds,
                               std::span<const FitResult> warm) {
    std::vector<FoldData> owned;
    if (folds.empty()) {
        owned = split_folds(ds, plan);
        folds = owned;
    }
    const std::size_t K = folds.size();
    CvOutcome out;
    out.fits.resize(K);
    std::vector<char> unconverged(K, 0);
    out.report.fold_rmse.assign(K, 0.0);
    out.report.fold_r2.assign(K, std::nullopt);

    parallel_for(K, [&](std::size_t f) {
        const FitResult* ws = warm.size() == K ? &warm[f] : nullptr;
        FitResult fit;
        try {
            fit = fit_method(folds[f].train, spec, cfg, ws);
        } catch (const NotConverged& e) {
            fit = e.best();
            unconverged[f] = 1;
        }
        const auto yhat = predict(fit, folds[f].test);
        out.report.fold_rmse[f] = rmse(folds[f].test_y, yhat);
        out.report.fold_r2[f] = out_of_sample_r2(folds[f].test_y, yhat);
        out.fits[f] = std::move(fit);
    });

    auto& rep = out.report;
    rep.mean_rmse = std::accumulate(rep.fold_rmse.begin(), rep.fold_rmse.end(), 0.0) /
                    static_cast<double>(K);
    double r2_sum = 0.0;
    std::size_t r2_n = 0;
    for (std::size_t f = 0; f < K; ++f) {
        if (rep.fold_r2[f]) {
            r2_sum += *rep.fold_r2[f];
            ++r2_n;
        } else {
            rep.degenerate_folds.push_back(static_cast<int>(f));
        }
        if (unconverged[f]) out.unconverged_folds.push_back(static_cast<int>(f));
    }
    rep.mean_r2 = r2_n > 0 ? r2_sum / static_cast<double>(r2_n) : 0.0;
    rep.fold_assignment = plan.assignment;
    rep.method = spec.method;
    rep.chosen_hyper = spec.hyper;
    rep.seed = plan.seed;
    return out;
}

CvReport cv_evaluate(const Dataset& ds, const MethodSpec& spec, const FoldPlan& plan,
                     const SolverConfig& cfg) {
    return cv_evaluate_detailed(ds, spec, plan, cfg).report;
}

double regularization_strength(const MethodSpec& spec) {
    switch (spec.method) {
        case Method::Lasso:
        case Method::Ridge: return spec.hyper.lambda.value_or(0.0);
        case Method::BetweennessSelect:
            return static_cast<double>(spec.hyper.threshold_b.value_or(0));
        // Lower speed thresholds keep fewer segments.
        case Method::SpeedSelect: return -spec.hyper.threshold_v.value_or(0.0);
        case Method::Mle:
        case Method::ForwardStepwise: return -static_cast<double>(spec.active.size());
    }
    return 0.0;
}

GridResult grid_search(const Dataset& ds, std::span<const MethodSpec> grid, const FoldPlan& plan,
                       const SolverConfig& cfg) {
    if (grid.empty()) throw Error("grid search needs at least one grid point");
    const auto folds = split_folds(ds, plan);
    GridResult result;
    result.reports.resize(grid.size());

    // Lasso points run from the largest lambda down, each fold warm-started
    // from the previous point's fit on the same fold.
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regularization_strength(grid[a]) > regularization_strength(grid[b]);
    });
    std::vector<FitResult> warm;
    for (std::size_t idx : order) {
        const bool lasso = grid[idx].method == Method::Lasso;
        auto outcome = cv_evaluate_detailed(ds, grid[idx], plan, cfg, folds,
                                            lasso ? std::span<const FitResult>(warm)
                                                  : std::span<const FitResult>());
        result.reports[idx] = std::move(outcome.report);
        if (lasso) warm = std::move(outcome.fits);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = result.reports[i].mean_rmse;
        const double b = result.reports[best].mean_rmse;
        if (a < b || (a == b && regularization_strength(grid[i]) > regularization_strength(grid[best])))
            best = i;
    }
    result.best_index = best;
    result.best = grid[best];
    return result;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0 && hi >= lo) || points == 0) throw Error("log grid needs 0 < lo <= hi and points > 0");
    std::vector<double> out(points);
    if (points == 1) {
        out[0] = hi;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<MethodSpec> default_lasso_grid(const Dataset& ds, std::size_t points) {
    const double lmax = lambda_max(standardize(ds));
    if (!(lmax > 0)) throw Error("lambda_max is zero; the data carry no signal to regularize");
    std::vector<MethodSpec> grid;
    for (double l : log_grid(1e-4 * lmax, lmax, points)) {
        MethodSpec s;
        s.method = Method::Lasso;
        s.hyper.lambda = l;
        grid.push_back(s);
    }
    return grid;
}

std::vector<MethodSpec> default_ridge_grid(std::size_t points) {
    std::vector<MethodSpec> grid;
    for (double l : log_grid(1e-4, 1e6, points)) {
        MethodSpec s;
        s.method = Method::Ridge;
        s.hyper.lambda = l;
        grid.push_back(s);
    }
    return grid;
}

}  // namespace msk
