#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "msk/eval.hpp"
#include "msk/selection.hpp"
#include "msk/synth.hpp"
#include "msk/types.hpp"

namespace msk {

// Every file written by this library carries this version; readers refuse
// anything else.
inline constexpr const char* kFormatVersion = "1";

nlohmann::json to_json(const Hyper& h);
Hyper hyper_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Standardization& st);
Standardization standardization_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CvReport& rep);
nlohmann::json to_json(const StatsReport& rep);
nlohmann::json to_json(const StepwiseTrace& trace);
nlohmann::json to_json(const synth::GroundTruth& truth);

nlohmann::json to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

/// Adds spec_version and writes pretty-printed JSON.
void write_json(const std::filesystem::path& path, nlohmann::json j);
/// Reads JSON and checks spec_version.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace msk
