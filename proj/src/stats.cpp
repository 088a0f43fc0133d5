#include "msk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msk/glm.hpp"
#include "msk/special.hpp"

namespace msk {

double variability(std::span<const double> y) {
    if (y.empty()) throw Error("variability needs at least one day");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(y.size());
}

double variability(const DrivingFraction& y) { return variability(y.y); }

double pearson(std::span<const double> y, std::span<const double> x) {
    if (y.size() != x.size() || y.size() < 2)
        throw DimensionMismatch("pearson needs equal-length vectors with at least two entries");
    const double n = static_cast<double>(y.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dy = y[i] - my, dx = x[i] - mx;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson correlation of a constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Responsiveness responsiveness(const Dataset& ds, const DrivingFraction& y) {
    if (y.y.size() != ds.rows()) throw DimensionMismatch("driving fraction length does not match rows");
    Responsiveness out;
    out.per_column.resize(ds.cols());
    for (std::size_t d = 0; d < ds.cols(); ++d) {
        const auto col = ds.x.column(d);
        try {
            out.per_column[d] = pearson(y.y, col);
        } catch (const ZeroVariance&) {
            // A constant y makes every correlation undefined; surface that.
            if (variability(y.y) == 0.0) throw;
            out.per_column[d] = 0.0;
            ++out.constant_columns;
        }
    }
    const std::size_t n_seg = ds.segment_count();
    std::vector<double> sum(n_seg, 0.0);
    std::vector<std::size_t> count(n_seg, 0);
    for (std::size_t d = 0; d < ds.cols(); ++d) {
        sum[ds.column_map[d].segment] += out.per_column[d];
        ++count[ds.column_map[d].segment];
    }
    out.per_segment.resize(n_seg, 0.0);
    for (std::size_t j = 0; j < n_seg; ++j)
        out.per_segment[j] = count[j] ? sum[j] / static_cast<double>(count[j]) : 0.0;
    out.rho = ds.cols() ? std::accumulate(out.per_column.begin(), out.per_column.end(), 0.0) /
                              static_cast<double>(ds.cols())
                        : 0.0;
    return out;
}

std::vector<std::pair<double, std::size_t>> g_curve(std::span<const double> per_segment,
                                                    std::span<const double> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw Error("g-curve thresholds must be ascending");
    std::vector<double> sorted(per_segment.begin(), per_segment.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, std::size_t>> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        out.emplace_back(t, static_cast<std::size_t>(below));
    }
    return out;
}

FTestResult f_test(const Dataset& ds, const FitResult& fit) {
    const auto y = driving_fraction(ds);
    if (!y.boundary_days.empty()) throw BoundaryFraction(y.boundary_days.front());
    const double m = static_cast<double>(ds.rows());
    const double nu = fit.df + 1.0;
    if (!(nu - 1.0 > 0.0)) throw InsufficientDof("model has no predictor degrees of freedom");
    if (!(m > nu)) throw InsufficientDof("F-test needs more days than model parameters");

    const double ybar = std::accumulate(y.y.begin(), y.y.end(), 0.0) / m;
    const double null_logit = logit(ybar);
    const auto eta = linear_predictor(fit, ds);
    FTestResult r;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const double z = logit(y.y[i]);
        r.rss_null += (z - null_logit) * (z - null_logit);
        r.rss_model += (z - eta[i]) * (z - eta[i]);
    }
    r.dof_num = nu - 1.0;
    r.dof_den = m - nu;
    r.f = ((r.rss_null - r.rss_model) / r.dof_num) / (r.rss_model / r.dof_den);
    r.p_value = std::clamp(f_survival(r.f, r.dof_num, r.dof_den), 0.0, 1.0);
    return r;
}

StatsReport build_stats_report(const Dataset& ds, const FitResult* fit,
                               std::span<const double> thresholds) {
    const auto y = driving_fraction(ds);
    StatsReport rep;
    rep.variability = variability(y);
    const auto resp = responsiveness(ds, y);
    rep.responsiveness = resp.rho;
    rep.per_segment_corr = resp.per_segment;
    rep.constant_columns = resp.constant_columns;
    rep.g_curve = g_curve(resp.per_segment, thresholds);
    if (fit) {
        const auto ft = f_test(ds, *fit);
        rep.f_statistic = ft.f;
        rep.f_dof = std::make_pair(ft.dof_num, ft.dof_den);
        rep.p_value = ft.p_value;
    }
    return rep;
}

}  // namespace msk
