#include "msk/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "msk/kernels.hpp"

namespace msk {
namespace {

double softplus(double x) noexcept {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double soft_threshold(double z, double t) noexcept {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Columns in play, stored column-major for the coordinate and Gram loops.
struct Problem {
    const Dataset& ds;
    std::vector<std::size_t> cols;
    std::vector<double> xcol;
    std::vector<double> q1;
    std::vector<double> q0;
    std::vector<double> n;
    std::size_t m;

    Problem(const Dataset& data, std::vector<std::size_t> columns)
        : ds(data), cols(std::move(columns)), m(data.rows()) {
        xcol = ds.x.columns_major(cols);
        q1.resize(m);
        q0.resize(m);
        n.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            q1[i] = static_cast<double>(ds.q_drive[i]);
            q0[i] = static_cast<double>(ds.q_transit[i]);
            n[i] = q1[i] + q0[i];
        }
    }

    std::size_t k() const noexcept { return cols.size(); }
    std::span<const double> col(std::size_t j) const noexcept { return {xcol.data() + j * m, m}; }

    double pooled_logit() const {
        const double d = std::accumulate(q1.begin(), q1.end(), 0.0);
        const double t = std::accumulate(n.begin(), n.end(), 0.0);
        const double f = d / t;
        return (f > 0.0 && f < 1.0) ? logit(f) : 0.0;
    }
};

// Quantities that depend on the current linear predictor.
struct State {
    std::vector<double> eta, resid, weight;
    double loglik = 0.0;

    void evaluate(const Problem& pb, double b0, std::span<const double> beta) {
        eta.assign(pb.m, b0);
        for (std::size_t j = 0; j < pb.k(); ++j)
            if (beta[j] != 0.0) kernels::axpy(beta[j], pb.col(j), eta);
        refresh(pb);
    }

    void refresh(const Problem& pb) {
        resid.resize(pb.m);
        weight.resize(pb.m);
        loglik = 0.0;
        for (std::size_t i = 0; i < pb.m; ++i) {
            const double e = eta[i];
            if (pb.q1[i] > 0) loglik -= pb.q1[i] * softplus(-e);
            if (pb.q0[i] > 0) loglik -= pb.q0[i] * softplus(e);
            const double p = sigmoid(e);
            resid[i] = pb.q1[i] - pb.n[i] * p;
            weight[i] = pb.n[i] * p * (1.0 - p);
        }
    }

    // Fraction of the maximum possible Fisher weight; collapses toward zero
    // when the data are separated and the iterate runs off to infinity.
    double weight_fraction(const Problem& pb) const {
        const double total = std::accumulate(pb.n.begin(), pb.n.end(), 0.0);
        return total > 0 ? std::accumulate(weight.begin(), weight.end(), 0.0) / (0.25 * total) : 0.0;
    }
};

FitResult make_result(const Problem& pb, double b0, std::span<const double> beta, Method method,
                      Hyper hyper) {
    FitResult r;
    r.intercept = b0;
    r.coefficients.assign(pb.ds.cols(), 0.0);
    for (std::size_t j = 0; j < pb.k(); ++j) r.coefficients[pb.cols[j]] = beta[j];
    r.method = method;
    r.hyper = std::move(hyper);
    return r;
}

bool all_finite(double b0, std::span<const double> beta) {
    if (!std::isfinite(b0)) return false;
    return std::all_of(beta.begin(), beta.end(), [](double v) { return std::isfinite(v); });
}

using EigenMat = Eigen::MatrixXd;
using EigenVec = Eigen::VectorXd;

// Newton system for (b0, beta) with ridge constant c on beta:
//   [ sum w     (X'w)'      ] [d0]   [g0]
//   [ X'w    X'WX + c I     ] [d ] = [g ]
class NewtonSystem {
public:
    NewtonSystem(const Problem& pb, double c) : pb_(pb), c_(c) {
        use_dual_ = c > 0.0 && pb.k() > pb.m;
        if (use_dual_) {
            // Row Gram X X' is fixed across iterations.
            rows_.resize(pb.m * pb.k());
            for (std::size_t j = 0; j < pb.k(); ++j) {
                auto col = pb.col(j);
                for (std::size_t i = 0; i < pb.m; ++i) rows_[i * pb.k() + j] = col[i];
            }
            gram_ = EigenMat(pb.m, pb.m);
            for (std::size_t a = 0; a < pb.m; ++a)
                for (std::size_t b = 0; b <= a; ++b) {
                    const double v = kernels::dot(row(a), row(b));
                    gram_(a, b) = v;
                    gram_(b, a) = v;
                }
        }
    }

    // Returns (d0, d).
    std::pair<double, std::vector<double>> solve(const State& st, double g0,
                                                 std::span<const double> g) const {
        return use_dual_ ? solve_dual(st, g0, g) : solve_direct(st, g0, g);
    }

private:
    std::span<const double> row(std::size_t i) const { return {rows_.data() + i * pb_.k(), pb_.k()}; }

    std::pair<double, std::vector<double>> solve_direct(const State& st, double g0,
                                                        std::span<const double> g) const {
        const std::size_t k = pb_.k();
        EigenMat H(k + 1, k + 1);
        H(0, 0) = kernels::sum(st.weight);
        for (std::size_t a = 0; a < k; ++a) {
            const double v = kernels::dot(st.weight, pb_.col(a));
            H(0, a + 1) = v;
            H(a + 1, 0) = v;
            for (std::size_t b = 0; b <= a; ++b) {
                const double h = kernels::wdot(st.weight, pb_.col(a), pb_.col(b));
                H(a + 1, b + 1) = h;
                H(b + 1, a + 1) = h;
            }
            H(a + 1, a + 1) += c_;
        }
        EigenVec rhs(k + 1);
        rhs(0) = g0;
        for (std::size_t a = 0; a < k; ++a) rhs(a + 1) = g[a];

        Eigen::LLT<EigenMat> llt(H);
        auto singular = [&] { return llt.info() != Eigen::Success || !(llt.rcond() > 1e-14); };
        if (singular()) {
            const double jitter = 1e-10 * H.diagonal().mean();
            H.diagonal().array() += jitter;
            llt.compute(H);
            if (singular()) throw SingularHessian("Hessian is numerically singular");
        }
        EigenVec d = llt.solve(rhs);
        std::vector<double> out(k);
        for (std::size_t a = 0; a < k; ++a) out[a] = d(a + 1);
        return {d(0), std::move(out)};
    }

    // Woodbury on A = c I + X' W X when there are more columns than rows.
    std::pair<double, std::vector<double>> solve_dual(const State& st, double g0,
                                                      std::span<const double> g) const {
        const std::size_t m = pb_.m;
        const std::size_t k = pb_.k();
        EigenVec s(m);
        for (std::size_t i = 0; i < m; ++i) s(i) = std::sqrt(st.weight[i]);
        EigenMat M = s.asDiagonal() * gram_ * s.asDiagonal();
        M.diagonal().array() += c_;
        Eigen::LLT<EigenMat> llt(M);
        if (llt.info() != Eigen::Success) throw SingularHessian("dual Newton system is singular");

        auto apply_inverse = [&](std::span<const double> v) {
            EigenVec u(m);
            for (std::size_t i = 0; i < m; ++i) u(i) = s(i) * kernels::dot(row(i), v);
            EigenVec z = llt.solve(u);
            std::vector<double> out(v.begin(), v.end());
            for (std::size_t i = 0; i < m; ++i) kernels::axpy(-s(i) * z(i), row(i), out);
            for (double& x : out) x /= c_;
            return out;
        };

        std::vector<double> b(k);
        for (std::size_t j = 0; j < k; ++j) b[j] = kernels::dot(st.weight, pb_.col(j));
        const double a = kernels::sum(st.weight);
        const auto Ag = apply_inverse(g);
        const auto Ab = apply_inverse(b);
        const double schur = a - kernels::dot(b, Ab);
        if (!(schur > 0.0)) throw SingularHessian("intercept Schur complement is not positive");
        const double d0 = (g0 - kernels::dot(b, Ag)) / schur;
        std::vector<double> d(Ag);
        kernels::axpy(-d0, Ab, d);
        return {d0, std::move(d)};
    }

    const Problem& pb_;
    double c_;
    bool use_dual_ = false;
    std::vector<double> rows_;
    EigenMat gram_;
};

// Damped Newton ascent on l - (c/2)||beta||^2.
FitResult newton_fit(const Dataset& ds, std::vector<std::size_t> cols, double c,
                     const SolverConfig& cfg, Method method, Hyper hyper) {
    cfg.validate();
    Problem pb(ds, std::move(cols));
    const std::size_t k = pb.k();
    NewtonSystem system(pb, c);

    double b0 = pb.pooled_logit();
    std::vector<double> beta(k, 0.0);
    State st;
    st.evaluate(pb, b0, beta);
    auto objective = [&](const State& s, std::span<const double> b) {
        return s.loglik - 0.5 * c * kernels::dot(b, b);
    };
    double obj = objective(st, beta);

    std::vector<double> trace{obj};
    std::vector<double> grad(k);
    double g0 = 0.0;
    double gnorm = 0.0;
    bool converged = false;
    bool stalled = false;
    int it = 0;
    State trial;
    std::vector<double> trial_beta(k);
    for (;; ++it) {
        g0 = kernels::sum(st.resid);
        for (std::size_t j = 0; j < k; ++j) grad[j] = kernels::dot(pb.col(j), st.resid) - c * beta[j];
        gnorm = std::max(std::abs(g0), inf_norm(grad));
        if (gnorm <= cfg.gradient_tolerance * std::max(1.0, std::abs(obj))) {
            converged = true;
            break;
        }
        if (it >= cfg.max_iterations) break;

        auto [d0, d] = system.solve(st, g0, grad);
        const double slope = g0 * d0 + kernels::dot(grad, d);
        double t = 1.0;
        bool accepted = false;
        while (t >= cfg.min_step) {
            const double tb0 = b0 + t * d0;
            for (std::size_t j = 0; j < k; ++j) trial_beta[j] = beta[j] + t * d[j];
            if (all_finite(tb0, trial_beta)) {
                trial.evaluate(pb, tb0, trial_beta);
                const double tobj = objective(trial, trial_beta);
                if (std::isfinite(tobj) && tobj >= obj + 1e-4 * t * slope) {
                    b0 = tb0;
                    beta.swap(trial_beta);
                    std::swap(st, trial);
                    obj = tobj;
                    accepted = true;
                    break;
                }
            }
            t *= cfg.step_shrink;
        }
        if (!accepted) {
            stalled = true;
            break;
        }
        trace.push_back(obj);
    }

    FitResult result = make_result(pb, b0, beta, method, std::move(hyper));
    result.iterations = it;
    result.final_gradient_norm = gnorm;
    result.objective = obj;
    result.objective_trace = std::move(trace);
    result.active_columns = pb.cols;
    result.df = static_cast<double>(k);

    if (converged && st.weight_fraction(pb) < 1e-6) {
        result.converged = false;
        throw NotConverged("fitted probabilities saturate: data are separated, no finite maximizer",
                           std::move(result));
    }
    result.converged = converged;
    if (!converged)
        throw NotConverged(stalled ? "line search stalled before the gradient criterion was met"
                                   : "iteration limit reached",
                           std::move(result));
    return result;
}

}  // namespace

void SolverConfig::validate() const {
    if (max_iterations <= 0) throw Error("max_iterations must be positive");
    if (!(gradient_tolerance > 0)) throw Error("gradient_tolerance must be positive");
    if (!(step_shrink > 0 && step_shrink < 1)) throw Error("step_shrink must lie in (0,1)");
    if (!(min_step > 0)) throw Error("min_step must be positive");
}

double log_likelihood(double intercept, std::span<const double> coefficients, const Dataset& ds) {
    if (coefficients.size() != ds.cols())
        throw DimensionMismatch("coefficient length does not match column count");
    const auto eta = linear_predictor(intercept, coefficients, ds);
    double ll = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        if (ds.q_drive[i] > 0) ll -= static_cast<double>(ds.q_drive[i]) * softplus(-eta[i]);
        if (ds.q_transit[i] > 0) ll -= static_cast<double>(ds.q_transit[i]) * softplus(eta[i]);
    }
    return ll;
}

Gradient log_likelihood_gradient(double intercept, std::span<const double> coefficients,
                                 const Dataset& ds) {
    if (coefficients.size() != ds.cols())
        throw DimensionMismatch("coefficient length does not match column count");
    const auto eta = linear_predictor(intercept, coefficients, ds);
    Gradient g;
    g.coefficients.assign(ds.cols(), 0.0);
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double n = static_cast<double>(ds.q_drive[i] + ds.q_transit[i]);
        const double r = static_cast<double>(ds.q_drive[i]) - n * sigmoid(eta[i]);
        g.intercept += r;
        kernels::axpy(r, ds.x.row(i), g.coefficients);
    }
    return g;
}

std::vector<double> linear_predictor(double intercept, std::span<const double> coefficients,
                                     const Dataset& ds) {
    if (coefficients.size() != ds.cols())
        throw DimensionMismatch("coefficient length does not match column count");
    std::vector<double> eta(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i)
        eta[i] = intercept + kernels::dot(ds.x.row(i), coefficients);
    return eta;
}

std::vector<double> linear_predictor(const FitResult& fit, const Dataset& ds) {
    return linear_predictor(fit.intercept, fit.coefficients, ds);
}

FitResult fit_mle(const Dataset& ds, std::span<const std::size_t> active_columns,
                  const SolverConfig& cfg) {
    std::vector<std::size_t> cols(active_columns.begin(), active_columns.end());
    for (std::size_t c : cols)
        if (c >= ds.cols()) throw DimensionMismatch("active column index out of range");
    std::sort(cols.begin(), cols.end());
    if (std::adjacent_find(cols.begin(), cols.end()) != cols.end())
        throw Error("duplicate active column");
    // With more parameters than rows the Hessian has rank at most m.
    if (cols.size() + 1 > ds.rows())
        throw SingularHessian("restricted MLE with " + std::to_string(cols.size()) +
                              " columns and an intercept needs more than " +
                              std::to_string(ds.rows()) + " rows");
    return newton_fit(ds, std::move(cols), 0.0, cfg, Method::Mle, {});
}

FitResult fit_ridge(const Dataset& ds, double lambda, const SolverConfig& cfg) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("ridge lambda must be >= 0");
    std::vector<std::size_t> cols(ds.cols());
    std::iota(cols.begin(), cols.end(), 0);
    Hyper h;
    h.lambda = lambda;
    FitResult r = newton_fit(ds, std::move(cols), 2.0 * lambda, cfg, Method::Ridge, h);
    r.df = effective_df_ridge(ds, lambda);
    r.active_columns.clear();
    return r;
}

double lambda_max(const Dataset& ds) {
    std::vector<std::size_t> cols(ds.cols());
    std::iota(cols.begin(), cols.end(), 0);
    Problem pb(ds, std::move(cols));
    State st;
    st.evaluate(pb, pb.pooled_logit(), std::vector<double>(pb.k(), 0.0));
    double lmax = 0.0;
    for (std::size_t j = 0; j < pb.k(); ++j)
        lmax = std::max(lmax, std::abs(kernels::dot(pb.col(j), st.resid)));
    return lmax;
}

FitResult fit_lasso(const Dataset& ds, double lambda, const SolverConfig& cfg,
                    const FitResult* warm_start) {
    cfg.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lasso lambda must be >= 0");
    std::vector<std::size_t> all(ds.cols());
    std::iota(all.begin(), all.end(), 0);
    Problem pb(ds, std::move(all));
    const std::size_t k = pb.k();
    const std::size_t m = pb.m;

    double b0 = pb.pooled_logit();
    std::vector<double> beta(k, 0.0);
    if (warm_start) {
        if (warm_start->coefficients.size() != k)
            throw DimensionMismatch("warm start has the wrong coefficient count");
        b0 = warm_start->intercept;
        beta = warm_start->coefficients;
    }

    auto l1 = [](std::span<const double> b) {
        double s = 0.0;
        for (double v : b) s += std::abs(v);
        return s;
    };

    State st;
    st.evaluate(pb, b0, beta);
    double obj = st.loglik - lambda * l1(beta);
    std::vector<double> trace{obj};

    std::vector<double> grad(k), curvature(k), cand(k), work(m), trial_beta(k);
    double gnorm = 0.0;
    bool converged = false;
    int it = 0;
    State trial;
    for (;; ++it) {
        // Optimality: subgradient of the penalized objective.
        const double g0 = kernels::sum(st.resid);
        gnorm = std::abs(g0);
        for (std::size_t j = 0; j < k; ++j) {
            grad[j] = kernels::dot(pb.col(j), st.resid);
            const double v = beta[j] != 0.0 ? std::abs(grad[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0))
                                            : std::max(0.0, std::abs(grad[j]) - lambda);
            gnorm = std::max(gnorm, v);
        }
        const double scale = std::max(1.0, std::abs(obj));
        if (gnorm <= cfg.gradient_tolerance * scale) {
            converged = true;
            break;
        }
        if (it >= cfg.max_iterations) break;

        // Quadratic model: minimize 1/2 sum w (z - eta')^2 + lambda |b'|_1.
        // `work` holds w * (z - eta') = resid - w * (eta' - eta).
        std::copy(st.resid.begin(), st.resid.end(), work.begin());
        for (std::size_t j = 0; j < k; ++j) curvature[j] = kernels::wdot(st.weight, pb.col(j), pb.col(j));
        const double wsum = kernels::sum(st.weight);
        if (!(wsum > 0.0)) break;
        double cand0 = b0;
        cand = beta;
        const double inner_tol = 1e-3 * cfg.gradient_tolerance * scale;

        auto sweep = [&](bool active_only) {
            double max_change = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (active_only && cand[j] == 0.0) continue;
                const double a = curvature[j];
                if (!(a > 0.0)) continue;
                const double z = kernels::dot(pb.col(j), work) + a * cand[j];
                const double nb = soft_threshold(z, lambda) / a;
                const double delta = nb - cand[j];
                if (delta != 0.0) {
                    kernels::waxpy(-delta, st.weight, pb.col(j), work);
                    cand[j] = nb;
                    max_change = std::max(max_change, a * delta * delta);
                }
            }
            const double d0 = kernels::sum(work) / wsum;
            if (d0 != 0.0) {
                kernels::axpy(-d0, st.weight, work);
                cand0 += d0;
                max_change = std::max(max_change, wsum * d0 * d0);
            }
            return max_change;
        };

        for (int outer = 0; outer < 200; ++outer) {
            const double full = sweep(false);
            if (full <= inner_tol) break;
            for (int inner = 0; inner < 1000; ++inner)
                if (sweep(true) <= inner_tol) break;
        }

        // Backtracking along the proximal Newton direction.
        const double d0 = cand0 - b0;
        double predicted = g0 * d0 - lambda * (l1(cand) - l1(beta));
        for (std::size_t j = 0; j < k; ++j) predicted += grad[j] * (cand[j] - beta[j]);
        if (!(predicted > 0.0)) break;
        double t = 1.0;
        bool accepted = false;
        while (t >= cfg.min_step) {
            const double tb0 = b0 + t * d0;
            for (std::size_t j = 0; j < k; ++j) trial_beta[j] = beta[j] + t * (cand[j] - beta[j]);
            trial.evaluate(pb, tb0, trial_beta);
            const double tobj = trial.loglik - lambda * l1(trial_beta);
            if (std::isfinite(tobj) && tobj >= obj + 1e-4 * t * predicted) {
                b0 = tb0;
                beta.swap(trial_beta);
                std::swap(st, trial);
                obj = tobj;
                accepted = true;
                break;
            }
            t *= cfg.step_shrink;
        }
        if (!accepted) break;
        trace.push_back(obj);
    }

    Hyper h;
    h.lambda = lambda;
    FitResult result = make_result(pb, b0, beta, Method::Lasso, h);
    result.iterations = it;
    result.final_gradient_norm = gnorm;
    result.objective = obj;
    result.objective_trace = std::move(trace);
    result.df = static_cast<double>(result.nonzero_count());
    result.converged = converged;
    if (!converged) throw NotConverged("lasso did not meet the optimality criterion", std::move(result));
    return result;
}

std::vector<double> predict(const FitResult& fit, const Dataset& ds) {
    const auto eta = linear_predictor(fit, ds);
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    std::vector<double> y(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) y[i] = std::clamp(sigmoid(eta[i]), lo, hi);
    return y;
}

double effective_df_ridge(const Matrix& x, double lambda) {
    if (!(lambda >= 0.0)) throw Error("lambda must be >= 0");
    if (x.rows() == 0 || x.cols() == 0) return 0.0;
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> X(x.data().data(), static_cast<Eigen::Index>(x.rows()),
                                 static_cast<Eigen::Index>(x.cols()));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0.0;
    const double cutoff = sv.maxCoeff() * static_cast<double>(std::max(x.rows(), x.cols())) *
                          std::numeric_limits<double>::epsilon();
    double df = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= cutoff) continue;
        const double s2 = sv(i) * sv(i);
        df += s2 / (s2 + lambda);
    }
    return df;
}

double effective_df_ridge(const Dataset& ds, double lambda) { return effective_df_ridge(ds.x, lambda); }

}  // namespace msk
