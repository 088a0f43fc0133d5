#include "msk/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace msk {

void LagSpec::validate() const {
    if (p < 0) throw Error("lag count p must be >= 0");
    if (delta_minutes <= 0) throw Error("lag width delta must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw DimensionMismatch("matrix data size does not match shape");
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
    return out;
}

std::vector<double> Matrix::columns_major(std::span<const std::size_t> cols) const {
    const std::size_t n = cols.empty() ? cols_ : cols.size();
    std::vector<double> out(n * rows_);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = cols.empty() ? k : cols[k];
        double* dst = out.data() + k * rows_;
        for (std::size_t r = 0; r < rows_; ++r) dst[r] = data_[r * cols_ + c];
    }
    return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t m = x.rows();
    if (q_drive.size() != m || q_transit.size() != m)
        throw DimensionMismatch("count vectors must have one entry per row");
    if (column_map.size() != x.cols())
        throw DimensionMismatch("column_map length must equal column count");
    if (!days.empty() && days.size() != m) throw DimensionMismatch("day labels must align with rows");
    for (std::size_t i = 0; i < m; ++i) {
        if (q_drive[i] < 0 || q_transit[i] < 0) throw Error("counts must be nonnegative");
        if (q_drive[i] + q_transit[i] == 0) throw ZeroTotalFlow(i);
    }
    std::set<ColumnKey> seen;
    for (const auto& key : column_map) {
        if (!seen.insert(key).second) throw SchemaError("duplicate (segment, lag) column");
        if (key.segment >= segment_labels.size())
            throw SchemaError("column refers to unknown segment index");
    }
    if (standardization) {
        if (standardization->mean.size() != x.cols() || standardization->scale.size() != x.cols())
            throw DimensionMismatch("standardization vectors must match column count");
    }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.hour_label = hour_label;
    out.lags = lags;
    out.x = x.select_rows(rows);
    out.column_map = column_map;
    out.standardization = standardization;
    out.segment_labels = segment_labels;
    out.q_drive.reserve(rows.size());
    out.q_transit.reserve(rows.size());
    for (std::size_t r : rows) {
        out.q_drive.push_back(q_drive[r]);
        out.q_transit.push_back(q_transit[r]);
        if (!days.empty()) out.days.push_back(days[r]);
    }
    return out;
}

std::vector<double> Dataset::totals() const {
    std::vector<double> n(q_drive.size());
    for (std::size_t i = 0; i < n.size(); ++i)
        n[i] = static_cast<double>(q_drive[i] + q_transit[i]);
    return n;
}

std::optional<std::size_t> Dataset::column_of(ColumnKey key) const {
    for (std::size_t d = 0; d < column_map.size(); ++d)
        if (column_map[d] == key) return d;
    return std::nullopt;
}

DrivingFraction driving_fraction(std::span<const std::int64_t> q_drive,
                                 std::span<const std::int64_t> q_transit) {
    if (q_drive.size() != q_transit.size())
        throw DimensionMismatch("driving and transit count vectors differ in length");
    DrivingFraction out;
    out.y.resize(q_drive.size());
    for (std::size_t i = 0; i < q_drive.size(); ++i) {
        const std::int64_t total = q_drive[i] + q_transit[i];
        if (total <= 0) throw ZeroTotalFlow(i);
        out.y[i] = static_cast<double>(q_drive[i]) / static_cast<double>(total);
        if (q_drive[i] == 0 || q_transit[i] == 0) out.boundary_days.push_back(i);
    }
    return out;
}

DrivingFraction driving_fraction(const Dataset& ds) {
    return driving_fraction(ds.q_drive, ds.q_transit);
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Mle: return "mle";
        case Method::Lasso: return "lasso";
        case Method::Ridge: return "ridge";
        case Method::ForwardStepwise: return "stepwise";
        case Method::BetweennessSelect: return "betweenness";
        case Method::SpeedSelect: return "speed";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    if (s == "mle") return Method::Mle;
    if (s == "lasso") return Method::Lasso;
    if (s == "ridge") return Method::Ridge;
    if (s == "stepwise") return Method::ForwardStepwise;
    if (s == "betweenness") return Method::BetweennessSelect;
    if (s == "speed") return Method::SpeedSelect;
    throw Error("unknown method '" + s + "'");
}

std::size_t FitResult::nonzero_count() const {
    return static_cast<std::size_t>(
        std::count_if(coefficients.begin(), coefficients.end(), [](double b) { return b != 0.0; }));
}

RawCoefficients FitResult::destandardize(const Standardization& st) const {
    if (st.mean.size() != coefficients.size() || st.scale.size() != coefficients.size())
        throw DimensionMismatch("standardization does not match coefficient count");
    RawCoefficients raw;
    raw.intercept = intercept;
    raw.coefficients.resize(coefficients.size());
    for (std::size_t d = 0; d < coefficients.size(); ++d) {
        raw.coefficients[d] = coefficients[d] / st.scale[d];
        raw.intercept -= raw.coefficients[d] * st.mean[d];
    }
    return raw;
}

void NetworkGraph::validate() const {
    std::unordered_set<std::string> node_set(nodes.begin(), nodes.end());
    if (node_set.size() != nodes.size()) throw SchemaError("duplicate node id in network");
    std::unordered_set<std::string> segs;
    for (const auto& e : edges) {
        if (!segs.insert(e.segment).second)
            throw SchemaError("segment '" + e.segment + "' appears on more than one edge");
        if (!node_set.count(e.tail) || !node_set.count(e.head))
            throw SchemaError("edge '" + e.segment + "' references an unknown node");
        if (!(e.length_miles > 0.0) || !std::isfinite(e.length_miles))
            throw SchemaError("edge '" + e.segment + "' must have a positive length");
    }
    std::unordered_set<std::string> orig(origins.begin(), origins.end());
    for (const auto& o : origins)
        if (!node_set.count(o)) throw SchemaError("origin '" + o + "' is not a node");
    for (const auto& d : destinations) {
        if (!node_set.count(d)) throw SchemaError("destination '" + d + "' is not a node");
        if (orig.count(d)) throw SchemaError("node '" + d + "' is both origin and destination");
    }
}

std::vector<SegmentId> NetworkGraph::driving_segments() const {
    std::vector<SegmentId> out;
    for (const auto& e : edges)
        if (e.mode == Mode::Driving) out.push_back({out.size(), e.segment, Mode::Driving});
    return out;
}

std::vector<const Edge*> NetworkGraph::driving_edges() const {
    std::vector<const Edge*> out;
    for (const auto& e : edges)
        if (e.mode == Mode::Driving) out.push_back(&e);
    return out;
}

std::optional<std::size_t> NetworkGraph::driving_index(const std::string& segment) const {
    std::size_t idx = 0;
    for (const auto& e : edges) {
        if (e.mode != Mode::Driving) continue;
        if (e.segment == segment) return idx;
        ++idx;
    }
    return std::nullopt;
}

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double y) noexcept { return std::log(y / (1.0 - y)); }

}  // namespace msk
