#include "msk/serialize.hpp"

#include <fstream>
#include <sstream>

namespace msk {
namespace {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && !j.at(key).is_null()) return j.at(key).get<T>();
    return std::nullopt;
}

void check_version(const nlohmann::json& j) {
    if (!j.contains("spec_version") || !j.at("spec_version").is_string() ||
        j.at("spec_version").get<std::string>() != kFormatVersion)
        throw VersionError("unsupported or missing spec_version (expected \"" +
                           std::string(kFormatVersion) + "\")");
}

}  // namespace

nlohmann::json to_json(const Hyper& h) {
    nlohmann::json j = nlohmann::json::object();
    put_optional(j, "lambda", h.lambda);
    put_optional(j, "threshold_b", h.threshold_b);
    put_optional(j, "lag_kb", h.lag_kb);
    put_optional(j, "threshold_v", h.threshold_v);
    put_optional(j, "lag_kv", h.lag_kv);
    return j;
}

Hyper hyper_from_json(const nlohmann::json& j) {
    Hyper h;
    h.lambda = get_optional<double>(j, "lambda");
    h.threshold_b = get_optional<std::int64_t>(j, "threshold_b");
    h.lag_kb = get_optional<int>(j, "lag_kb");
    h.threshold_v = get_optional<double>(j, "threshold_v");
    h.lag_kv = get_optional<int>(j, "lag_kv");
    return h;
}

nlohmann::json to_json(const FitResult& fit) {
    return {{"intercept", fit.intercept},
            {"coefficients", fit.coefficients},
            {"method", to_string(fit.method)},
            {"hyper", to_json(fit.hyper)},
            {"df", fit.df},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"final_gradient_norm", fit.final_gradient_norm},
            {"objective", fit.objective},
            {"active_columns", fit.active_columns},
            {"nonzero", fit.nonzero_count()}};
}

FitResult fit_from_json(const nlohmann::json& j) {
    FitResult fit;
    try {
        fit.intercept = j.at("intercept").get<double>();
        fit.coefficients = j.at("coefficients").get<std::vector<double>>();
        fit.method = method_from_string(j.at("method").get<std::string>());
        fit.hyper = hyper_from_json(j.at("hyper"));
        fit.df = j.at("df").get<double>();
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<int>();
        fit.final_gradient_norm = j.at("final_gradient_norm").get<double>();
        fit.objective = j.value("objective", 0.0);
        fit.active_columns = j.value("active_columns", std::vector<std::size_t>{});
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("fit record: ") + e.what());
    }
    return fit;
}

nlohmann::json to_json(const Standardization& st) {
    return {{"mean", st.mean}, {"scale", st.scale}};
}

Standardization standardization_from_json(const nlohmann::json& j) {
    Standardization st;
    st.mean = j.at("mean").get<std::vector<double>>();
    st.scale = j.at("scale").get<std::vector<double>>();
    return st;
}

nlohmann::json to_json(const CvReport& rep) {
    nlohmann::json r2 = nlohmann::json::array();
    for (const auto& v : rep.fold_r2) r2.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    return {{"method", to_string(rep.method)},
            {"chosen_hyper", to_json(rep.chosen_hyper)},
            {"fold_rmse", rep.fold_rmse},
            {"fold_r2", r2},
            {"mean_rmse", rep.mean_rmse},
            {"mean_r2", rep.mean_r2},
            {"degenerate_folds", rep.degenerate_folds},
            {"fold_assignment", rep.fold_assignment},
            {"seed", rep.seed}};
}

nlohmann::json to_json(const StatsReport& rep) {
    nlohmann::json j{{"variability", rep.variability},
                     {"responsiveness", rep.responsiveness},
                     {"per_segment_corr", rep.per_segment_corr},
                     {"constant_columns", rep.constant_columns}};
    nlohmann::json g = nlohmann::json::array();
    for (const auto& [t, c] : rep.g_curve) g.push_back({{"threshold", t}, {"count", c}});
    j["g_curve"] = std::move(g);
    if (rep.f_statistic) {
        j["f_statistic"] = *rep.f_statistic;
        j["f_dof"] = {rep.f_dof->first, rep.f_dof->second};
        j["p_value"] = *rep.p_value;
    }
    return j;
}

nlohmann::json to_json(const StepwiseTrace& trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& [col, score] : trace.steps) steps.push_back({{"column", col}, {"cv_rmse", score}});
    return {{"baseline_rmse", trace.baseline_rmse},
            {"steps", steps},
            {"stop_reason", to_string(trace.stop_reason)}};
}

nlohmann::json to_json(const synth::GroundTruth& truth) {
    nlohmann::json beta = nlohmann::json::array();
    for (std::size_t c : truth.support) beta.push_back(truth.beta[c]);
    return {{"hour", truth.hour},
            {"intercept", truth.intercept},
            {"support", truth.support},
            {"beta", beta}};
}

nlohmann::json to_json(const Dataset& ds) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& k : ds.column_map) cols.push_back({k.segment, k.lag});
    nlohmann::json j{{"hour_label", ds.hour_label},
                     {"lags", {{"p", ds.lags.p}, {"delta_minutes", ds.lags.delta_minutes}}},
                     {"rows", ds.rows()},
                     {"cols", ds.cols()},
                     {"x", std::vector<double>(ds.x.data().begin(), ds.x.data().end())},
                     {"q_drive", ds.q_drive},
                     {"q_transit", ds.q_transit},
                     {"column_map", cols},
                     {"segment_labels", ds.segment_labels},
                     {"days", ds.days}};
    if (ds.standardization) j["standardization"] = to_json(*ds.standardization);
    return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset ds;
    try {
        ds.hour_label = j.at("hour_label").get<std::string>();
        ds.lags.p = j.at("lags").at("p").get<int>();
        ds.lags.delta_minutes = j.at("lags").at("delta_minutes").get<int>();
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        ds.x = Matrix(rows, cols, j.at("x").get<std::vector<double>>());
        ds.q_drive = j.at("q_drive").get<std::vector<std::int64_t>>();
        ds.q_transit = j.at("q_transit").get<std::vector<std::int64_t>>();
        for (const auto& k : j.at("column_map"))
            ds.column_map.push_back({k.at(0).get<std::size_t>(), k.at(1).get<int>()});
        ds.segment_labels = j.at("segment_labels").get<std::vector<std::string>>();
        ds.days = j.value("days", std::vector<std::string>{});
        if (j.contains("standardization"))
            ds.standardization = standardization_from_json(j.at("standardization"));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("dataset record: ") + e.what());
    }
    ds.validate();
    return ds;
}

void write_json(const std::filesystem::path& path, nlohmann::json j) {
    j["spec_version"] = kFormatVersion;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    check_version(j);
    return j;
}

}  // namespace msk
