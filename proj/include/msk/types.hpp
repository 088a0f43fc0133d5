#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msk/errors.hpp"

namespace msk {

enum class Mode { Driving, Transit };

struct SegmentId {
    std::size_t index = 0;
    std::string label;
    Mode mode = Mode::Driving;
};

/// Lag structure of the design: lags 0..p, each `delta_minutes` wide.
struct LagSpec {
    int p = 6;
    int delta_minutes = 10;

    int lag_count() const noexcept { return p + 1; }
    int horizon_minutes() const noexcept { return p * delta_minutes; }
    void validate() const;
};

/// Dense row-major matrix. Rows are days, columns are predictors.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double> column(std::size_t c) const;

    /// Column-major copy of the selected columns (all columns when empty),
    /// laid out as consecutive column vectors of length rows().
    std::vector<double> columns_major(std::span<const std::size_t> cols = {}) const;

    Matrix select_rows(std::span<const std::size_t> rows) const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct ColumnKey {
    std::size_t segment = 0;
    int lag = 0;
    auto operator<=>(const ColumnKey&) const = default;
};

struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;
    bool operator==(const Standardization&) const = default;
};

/// One hour-of-day worth of observations: m days of lagged travel times
/// (minutes) plus the driving and transit counts of each day.
struct Dataset {
    std::string hour_label;
    LagSpec lags;
    Matrix x;
    std::vector<std::int64_t> q_drive;
    std::vector<std::int64_t> q_transit;
    std::vector<ColumnKey> column_map;
    std::optional<Standardization> standardization;
    // Labels of the driving segments, indexed by ColumnKey::segment.
    std::vector<std::string> segment_labels;
    // Day identifiers aligned with rows (may be empty for synthetic data).
    std::vector<std::string> days;

    std::size_t rows() const noexcept { return x.rows(); }
    std::size_t cols() const noexcept { return x.cols(); }
    std::size_t segment_count() const noexcept { return segment_labels.size(); }

    /// Throws on any broken invariant (lengths, zero totals, duplicate columns).
    void validate() const;

    /// Subset of rows, keeping columns, labels and standardization.
    Dataset select_rows(std::span<const std::size_t> rows) const;

    std::vector<double> totals() const;

    /// Column index of (segment, lag), if present.
    std::optional<std::size_t> column_of(ColumnKey key) const;
};

struct DrivingFraction {
    std::vector<double> y;
    // Days whose fraction sits on 0 or 1.
    std::vector<std::size_t> boundary_days;
};

DrivingFraction driving_fraction(std::span<const std::int64_t> q_drive,
                                 std::span<const std::int64_t> q_transit);
DrivingFraction driving_fraction(const Dataset& ds);

enum class Method { Mle, Lasso, Ridge, ForwardStepwise, BetweennessSelect, SpeedSelect };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct Hyper {
    std::optional<double> lambda;
    std::optional<std::int64_t> threshold_b;
    std::optional<int> lag_kb;
    std::optional<double> threshold_v;
    std::optional<int> lag_kv;
    bool operator==(const Hyper&) const = default;
};

struct RawCoefficients {
    double intercept = 0.0;
    std::vector<double> coefficients;
};

struct FitResult {
    double intercept = 0.0;
    std::vector<double> coefficients;  // standardized-column units
    Method method = Method::Mle;
    Hyper hyper;
    double df = 0.0;
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double objective = 0.0;
    // Columns the fitter was allowed to move (restricted fits only).
    std::vector<std::size_t> active_columns;
    // Penalized objective after each accepted iteration.
    std::vector<double> objective_trace;

    std::size_t nonzero_count() const;

    /// Coefficients on the raw scale: b_raw[d] = b[d] / s[d] and the
    /// intercept absorbs the centering.
    RawCoefficients destandardize(const Standardization& st) const;
};

struct Edge {
    std::string segment;
    std::string tail;
    std::string head;
    double length_miles = 0.0;
    Mode mode = Mode::Driving;
    // Raw GeoJSON geometry text, passed through untouched on export.
    std::string geometry_json;
};

struct NetworkGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::vector<std::string> origins;
    std::vector<std::string> destinations;

    void validate() const;

    /// Roster of driving segments, dense indices in file order.
    std::vector<SegmentId> driving_segments() const;
    std::vector<const Edge*> driving_edges() const;
    std::optional<std::size_t> driving_index(const std::string& segment) const;
};

struct CvReport {
    std::vector<double> fold_rmse;
    std::vector<std::optional<double>> fold_r2;  // nullopt: zero-variance held-out fold
    double mean_rmse = 0.0;
    double mean_r2 = 0.0;
    std::vector<int> fold_assignment;
    Method method = Method::Mle;
    Hyper chosen_hyper;
    std::uint64_t seed = 0;
    std::vector<int> degenerate_folds;
};

struct StatsReport {
    double variability = 0.0;
    double responsiveness = 0.0;
    std::vector<double> per_segment_corr;
    std::size_t constant_columns = 0;
    std::optional<double> f_statistic;
    std::optional<std::pair<double, double>> f_dof;
    std::optional<double> p_value;
    std::vector<std::pair<double, std::size_t>> g_curve;
};

double sigmoid(double z) noexcept;
double logit(double y) noexcept;

}  // namespace msk
