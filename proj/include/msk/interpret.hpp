#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "msk/types.hpp"

namespace msk {

/// w_j = sum over lags of segment j's coefficients, indexed by segment.
std::vector<double> segment_weights(std::span<const double> coefficients,
                                    std::span<const ColumnKey> column_map, std::size_t n_segments);
std::vector<double> segment_weights(const FitResult& fit, const Dataset& ds);

struct NormalizedWeights {
    std::vector<double> values;
    bool degenerate = false;  // all weights equal; every value is 0.5
};

/// Min-max scaling to [0, 1]; the most negative weight maps to 0.
NormalizedWeights normalize_weights(std::span<const double> weights);

void write_heatmap_csv(const std::filesystem::path& path, std::span<const std::string> labels,
                       std::span<const double> weights, const NormalizedWeights& normalized);

/// FeatureCollection of the driving segments that carry geometry, with the
/// weights as properties. Returns false (and writes nothing) when no edge
/// has geometry.
bool write_heatmap_geojson(const std::filesystem::path& path, const NetworkGraph& graph,
                           std::span<const double> weights, const NormalizedWeights& normalized);

}  // namespace msk
