#include "msk/interpret.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "msk/serialize.hpp"

namespace msk {

std::vector<double> segment_weights(std::span<const double> coefficients,
                                    std::span<const ColumnKey> column_map, std::size_t n_segments) {
    if (coefficients.size() != column_map.size())
        throw DimensionMismatch("coefficient count does not match column map");
    std::vector<double> w(n_segments, 0.0);
    for (std::size_t d = 0; d < column_map.size(); ++d) {
        if (column_map[d].segment >= n_segments) throw DimensionMismatch("column refers to unknown segment");
        w[column_map[d].segment] += coefficients[d];
    }
    return w;
}

std::vector<double> segment_weights(const FitResult& fit, const Dataset& ds) {
    return segment_weights(fit.coefficients, ds.column_map, ds.segment_count());
}

NormalizedWeights normalize_weights(std::span<const double> weights) {
    NormalizedWeights out;
    out.values.assign(weights.size(), 0.5);
    if (weights.empty()) return out;
    const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < weights.size(); ++i)
        out.values[i] = std::clamp((weights[i] - *lo) / range, 0.0, 1.0);
    return out;
}

void write_heatmap_csv(const std::filesystem::path& path, std::span<const std::string> labels,
                       std::span<const double> weights, const NormalizedWeights& normalized) {
    if (labels.size() != weights.size() || normalized.values.size() != weights.size())
        throw DimensionMismatch("heatmap columns differ in length");
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "segment,label,weight,normalized_weight\n" << std::setprecision(17);
    for (std::size_t j = 0; j < weights.size(); ++j)
        out << j << ',' << labels[j] << ',' << weights[j] << ',' << normalized.values[j] << '\n';
}

bool write_heatmap_geojson(const std::filesystem::path& path, const NetworkGraph& graph,
                           std::span<const double> weights, const NormalizedWeights& normalized) {
    const auto driving = graph.driving_edges();
    if (driving.size() != weights.size()) throw DimensionMismatch("weights do not match the network");
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t j = 0; j < driving.size(); ++j) {
        if (driving[j]->geometry_json.empty()) continue;
        features.push_back({{"type", "Feature"},
                            {"geometry", nlohmann::json::parse(driving[j]->geometry_json)},
                            {"properties",
                             {{"segment", j},
                              {"label", driving[j]->segment},
                              {"weight", weights[j]},
                              {"normalized_weight", normalized.values[j]}}}});
    }
    if (features.empty()) return false;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << nlohmann::json{{"type", "FeatureCollection"}, {"spec_version", kFormatVersion}, {"features", features}}.dump(2) << '\n';
    return true;
}

}  // namespace msk
