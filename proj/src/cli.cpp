#include "msk/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "msk/eval.hpp"
#include "msk/glm.hpp"
#include "msk/ingest.hpp"
#include "msk/interpret.hpp"
#include "msk/parallel.hpp"
#include "msk/selection.hpp"
#include "msk/serialize.hpp"
#include "msk/stats.hpp"
#include "msk/synth.hpp"

namespace msk::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ConfigError : public Error {
public:
    using Error::Error;
};

struct Options {
    // inputs
    std::string data_dir = ".";
    std::string travel_path, flows_path, network_path;
    double health_threshold = 0.8;
    std::string exclude_days;
    std::string hour = "08:00";
    int p = 6;
    int delta = 10;

    // method
    std::string method = "lasso";
    std::optional<double> lambda;
    bool lambda_auto = false;
    std::optional<std::int64_t> threshold_b;
    int lag_kb = 0;
    std::optional<double> threshold_v;
    int lag_kv = 0;
    int grid_points = 20;
    int max_steps = 30;

    int folds = 5;
    std::uint64_t seed = 1;
    std::string out = ".";

    // cv
    bool per_hour = false;
    bool parallel = false;

    // stats / heatmap
    std::string fit_path;
    std::string thresholds = "-1:0.05:1";
    bool raw_units = false;

    // generate
    std::size_t days = 130;
    std::size_t segments = 158;
    std::vector<std::string> hours{"08:00"};
    std::size_t support_size = 8;
    std::int64_t total_travelers = 10'000;
    double intercept = 0.5;
};

template <typename T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json inputs_json(const Options& o) {
    return {{"data", o.data_dir},
            {"travel_times", o.travel_path},
            {"flows", o.flows_path},
            {"network", o.network_path},
            {"health_threshold", o.health_threshold},
            {"exclude_days", o.exclude_days},
            {"lags", o.p},
            {"delta", o.delta}};
}

json method_json(const Options& o) {
    return {{"method", o.method},
            {"lambda", opt_json(o.lambda)},
            {"lambda_auto", o.lambda_auto},
            {"threshold_b", opt_json(o.threshold_b)},
            {"lag_kb", o.lag_kb},
            {"threshold_v", opt_json(o.threshold_v)},
            {"lag_kv", o.lag_kv},
            {"grid_points", o.grid_points},
            {"max_steps", o.max_steps},
            {"folds", o.folds},
            {"seed", o.seed}};
}

// ---------------------------------------------------------------- inputs

struct Inputs {
    NetworkGraph graph;
    RawTravelTimeTable travel;
    RawFlowTable flows;
    std::set<std::string> exclude;
    std::size_t imputed = 0;
    std::size_t dropped = 0;
};

fs::path input_path(const std::string& given, const std::string& dir, const char* name) {
    fs::path p = given.empty() ? fs::path(dir) / name : fs::path(given);
    if (!fs::is_regular_file(p)) throw ConfigError("missing input file: " + p.string());
    return p;
}

Inputs load_inputs(const Options& o) {
    if (o.health_threshold < 0 || o.health_threshold > 1)
        throw ConfigError("--health-threshold must lie in [0, 1]");
    Inputs in;
    in.graph = load_network(input_path(o.network_path, o.data_dir, "network.json"));
    in.flows = load_flows(input_path(o.flows_path, o.data_dir, "flows.csv"));
    auto raw = load_travel_times(input_path(o.travel_path, o.data_dir, "travel_times.csv"),
                                 o.health_threshold);
    auto imputed = impute_missing_speeds(raw, in.graph);
    in.travel = std::move(imputed.table);
    in.imputed = imputed.imputed;
    in.dropped = imputed.dropped.size();
    if (!o.exclude_days.empty()) {
        if (!fs::is_regular_file(o.exclude_days))
            throw ConfigError("missing input file: " + o.exclude_days);
        in.exclude = load_exclude_days(o.exclude_days);
    }
    return in;
}

Dataset build_dataset(const Inputs& in, const Options& o, const std::string& hour) {
    LagSpec lags{o.p, o.delta};
    lags.validate();
    return assemble_dataset(in.travel, in.flows, in.graph, hour, lags, in.exclude);
}

fs::path output_dir(const Options& o) {
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
    return dir;
}

// ------------------------------------------------------------- selection

Method parse_method(const std::string& name) {
    if (name == "stepwise") return Method::ForwardStepwise;
    if (name == "betweenness") return Method::BetweennessSelect;
    if (name == "speed") return Method::SpeedSelect;
    return method_from_string(name);
}

std::size_t min_train_rows(const FoldPlan& plan) {
    std::size_t best = plan.assignment.size();
    for (int f = 0; f < plan.k; ++f) best = std::min(best, plan.train_rows(f).size());
    return best;
}

// Pre-specified subsets are kept to at most half the smallest training fold
// so every restricted fit stays well determined.
std::vector<MethodSpec> threshold_grid(const Dataset& raw, const Inputs& in, const Options& o,
                                       Method method, std::size_t max_columns) {
    std::vector<MethodSpec> grid;
    if (method == Method::BetweennessSelect) {
        const auto cent = betweenness_centrality(in.graph);
        std::set<std::uint64_t> levels(cent.begin(), cent.end());
        for (std::uint64_t b : levels) {
            if (b == 0) continue;
            for (int lag = 0; lag <= raw.lags.p; ++lag) {
                MethodSpec s;
                s.method = method;
                s.hyper.threshold_b = static_cast<std::int64_t>(b);
                s.hyper.lag_kb = lag;
                s.active = select_by_betweenness(cent, raw, static_cast<std::int64_t>(b), lag);
                if (s.active.size() <= max_columns) grid.push_back(std::move(s));
            }
        }
    } else {
        const auto speeds = average_speed(in.travel, in.graph, o.hour);
        std::set<double> levels(speeds.begin(), speeds.end());
        for (double v : levels) {
            for (int lag = 0; lag <= raw.lags.p; ++lag) {
                MethodSpec s;
                s.method = method;
                s.hyper.threshold_v = v;
                s.hyper.lag_kv = lag;
                s.active = select_by_speed(speeds, raw, v, lag);
                if (s.active.size() <= max_columns) grid.push_back(std::move(s));
            }
        }
    }
    if (grid.empty()) throw ConfigError("no threshold yields a small enough column subset");
    return grid;
}

struct Choice {
    MethodSpec spec;
    json grid = nullptr;  // per-point CV summary when a grid was searched
    std::optional<CvReport> best_report;
};

Choice choose_spec(const Dataset& raw, const Inputs& in, const Options& o, const FoldPlan* plan,
                   const SolverConfig& cfg) {
    Choice c;
    c.spec.method = parse_method(o.method);
    const Method m = c.spec.method;

    if (o.lambda_auto) {
        if (!plan) throw ConfigError("--lambda-auto needs a fold plan");
        std::vector<MethodSpec> grid;
        const auto points = static_cast<std::size_t>(o.grid_points);
        switch (m) {
            case Method::Lasso: grid = default_lasso_grid(raw, points); break;
            case Method::Ridge: grid = default_ridge_grid(points); break;
            case Method::BetweennessSelect:
            case Method::SpeedSelect:
                grid = threshold_grid(raw, in, o, m, min_train_rows(*plan) / 2);
                break;
            default: throw ConfigError("--lambda-auto applies to lasso, ridge, betweenness and speed");
        }
        auto result = grid_search(raw, grid, *plan, cfg);
        c.grid = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i)
            c.grid.push_back({{"hyper", to_json(grid[i].hyper)},
                              {"columns", grid[i].active.size()},
                              {"mean_rmse", result.reports[i].mean_rmse},
                              {"mean_r2", result.reports[i].mean_r2}});
        c.best_report = result.reports[result.best_index];
        c.spec = result.best;
        return c;
    }

    switch (m) {
        case Method::Lasso:
        case Method::Ridge:
            if (!o.lambda) throw ConfigError("--lambda or --lambda-auto is required for " + o.method);
            c.spec.hyper.lambda = *o.lambda;
            break;
        case Method::Mle:
            c.spec.active.resize(raw.cols());
            std::iota(c.spec.active.begin(), c.spec.active.end(), std::size_t{0});
            break;
        case Method::BetweennessSelect:
            if (!o.threshold_b) throw ConfigError("--threshold-b or --lambda-auto is required");
            c.spec.hyper.threshold_b = *o.threshold_b;
            c.spec.hyper.lag_kb = o.lag_kb;
            c.spec.active = select_by_betweenness(in.graph, raw, *o.threshold_b, o.lag_kb);
            break;
        case Method::SpeedSelect: {
            if (!o.threshold_v) throw ConfigError("--threshold-v or --lambda-auto is required");
            const auto speeds = average_speed(in.travel, in.graph, o.hour);
            c.spec.hyper.threshold_v = *o.threshold_v;
            c.spec.hyper.lag_kv = o.lag_kv;
            c.spec.active = select_by_speed(speeds, raw, *o.threshold_v, o.lag_kv);
            break;
        }
        case Method::ForwardStepwise: break;
    }
    return c;
}

json dataset_summary(const Dataset& ds) {
    return {{"hour", ds.hour_label}, {"m", ds.rows()}, {"D", ds.cols()},
            {"segments", ds.segment_count()}, {"days", ds.days}};
}

void write_weights(const fs::path& path, const Dataset& ds, std::span<const double> coefficients) {
    const auto w = segment_weights(coefficients, ds.column_map, ds.segment_count());
    write_heatmap_csv(path, ds.segment_labels, w, normalize_weights(w));
}

// Shared by `fit` and `stepwise`: fits on the full standardized data.
struct FitOutput {
    FitResult fit;
    json selection = json::object();
    std::optional<StepwiseTrace> trace;
};

FitOutput fit_full(const Dataset& raw, const Inputs& in, const Options& o, const SolverConfig& cfg) {
    FitOutput out;
    const Method method = parse_method(o.method);
    const bool needs_plan = o.lambda_auto || method == Method::ForwardStepwise;
    std::optional<FoldPlan> plan;
    if (needs_plan) plan = make_folds(raw.rows(), o.folds, o.seed);

    if (method == Method::ForwardStepwise) {
        if (o.max_steps < 0) throw ConfigError("--max-steps must be nonnegative");
        auto [fit, trace] = forward_stepwise(raw, cfg, *plan, static_cast<std::size_t>(o.max_steps));
        out.fit = std::move(fit);
        out.trace = std::move(trace);
        return out;
    }
    auto choice = choose_spec(raw, in, o, plan ? &*plan : nullptr, cfg);
    out.fit = fit_method(standardize(raw), choice.spec, cfg);
    out.fit.hyper = choice.spec.hyper;
    if (!choice.grid.is_null()) {
        out.selection["grid"] = std::move(choice.grid);
        out.selection["chosen"] = to_json(choice.spec.hyper);
    }
    return out;
}

json fit_record(const Options& o, const Dataset& raw, const FitOutput& fo, const char* command) {
    const Dataset dsz = standardize(raw);
    json j{{"command", command},
           {"config", {{"inputs", inputs_json(o)}, {"method", method_json(o)}, {"out", o.out}}},
           {"dataset", dataset_summary(raw)},
           {"fit", to_json(fo.fit)},
           {"standardization", to_json(*dsz.standardization)}};
    if (!fo.selection.empty()) j["selection"] = fo.selection;
    if (fo.trace) j["stepwise"] = to_json(*fo.trace);
    return j;
}

// -------------------------------------------------------------- commands

int cmd_generate(const Options& o, std::ostream& out) {
    if (o.days < 2) throw ConfigError("--days must be at least 2");
    if (o.segments < 1) throw ConfigError("--segments must be positive");
    if (o.total_travelers <= 0) throw ConfigError("--total-travelers must be positive");
    synth::GeneratorConfig cfg;
    cfg.seed = o.seed;
    cfg.days = o.days;
    cfg.segments = o.segments;
    cfg.lags = LagSpec{o.p, o.delta};
    cfg.lags.validate();
    cfg.hours = o.hours;
    for (const auto& h : cfg.hours) parse_clock(h);
    cfg.support_size = o.support_size;
    cfg.total_travelers = o.total_travelers;
    cfg.intercept = o.intercept;
    const auto sc = synth::generate_scenario(cfg);

    const fs::path dir = output_dir(o);
    write_travel_times(dir / "travel_times.csv", sc.travel);
    write_flows(dir / "flows.csv", sc.flows);
    write_network(dir / "network.json", sc.graph);
    json truths = json::array();
    for (const auto& t : sc.truths) truths.push_back(to_json(t));
    const std::size_t D = sc.datasets.front().cols();
    write_json(dir / "truth.json",
               {{"command", "generate"},
                {"config",
                 {{"seed", o.seed}, {"days", o.days}, {"segments", o.segments}, {"lags", o.p},
                  {"delta", o.delta}, {"hours", o.hours}, {"support_size", o.support_size},
                  {"total_travelers", o.total_travelers}, {"intercept", o.intercept},
                  {"out", o.out}}},
                {"m", sc.datasets.front().rows()},
                {"D", D},
                {"driving_segments", sc.datasets.front().segment_count()},
                {"truths", truths}});
    out << "generated " << sc.datasets.size() << " hour(s): m=" << sc.datasets.front().rows()
        << " D=" << D << " -> " << dir.string() << '\n';
    return kOk;
}

int cmd_fit(const Options& o, std::ostream& out, const char* command) {
    const Inputs in = load_inputs(o);
    const Dataset raw = build_dataset(in, o, o.hour);
    const fs::path dir = output_dir(o);
    const auto fo = fit_full(raw, in, o, SolverConfig{});
    write_json(dir / "fit.json", fit_record(o, raw, fo, command));
    write_weights(dir / "weights.csv", raw, fo.fit.coefficients);
    if (fo.trace) {
        json t = to_json(*fo.trace);
        t["command"] = command;
        t["config"] = {{"inputs", inputs_json(o)}, {"method", method_json(o)}, {"out", o.out}};
        t["dataset"] = dataset_summary(raw);
        write_json(dir / "stepwise_trace.json", t);
    }
    out << command << ": method=" << to_string(fo.fit.method) << " hour=" << raw.hour_label
        << " m=" << raw.rows() << " D=" << raw.cols() << " nonzero=" << fo.fit.nonzero_count()
        << " df=" << fo.fit.df << " converged=" << (fo.fit.converged ? "true" : "false") << '\n';
    return kOk;
}

struct HourResult {
    std::string hour;
    std::size_t m = 0;
    CvReport report;
    double variability = 0.0;
};

HourResult cv_hour(const Inputs& in, Options o, const std::string& hour, const fs::path& file) {
    o.hour = hour;
    const Dataset raw = build_dataset(in, o, hour);
    const SolverConfig cfg;
    const FoldPlan plan = make_folds(raw.rows(), o.folds, o.seed);
    json j{{"command", "cv"},
           {"config", {{"inputs", inputs_json(o)}, {"method", method_json(o)}, {"out", o.out}}},
           {"dataset", dataset_summary(raw)}};

    CvOutcome outcome;
    if (parse_method(o.method) == Method::ForwardStepwise) {
        if (o.max_steps < 0) throw ConfigError("--max-steps must be nonnegative");
        auto [fit, trace] = forward_stepwise(raw, cfg, plan, static_cast<std::size_t>(o.max_steps));
        MethodSpec spec;
        spec.method = Method::ForwardStepwise;
        spec.active = fit.active_columns;
        outcome = cv_evaluate_detailed(raw, spec, plan, cfg);
        j["stepwise"] = to_json(trace);
    } else {
        auto choice = choose_spec(raw, in, o, &plan, cfg);
        if (choice.best_report) {
            outcome.report = *choice.best_report;
            j["grid"] = std::move(choice.grid);
        } else {
            outcome = cv_evaluate_detailed(raw, choice.spec, plan, cfg);
        }
    }
    j["report"] = to_json(outcome.report);
    j["unconverged_folds"] = outcome.unconverged_folds;
    const double var = variability(driving_fraction(raw));
    j["variability"] = var;
    write_json(file, j);
    return {raw.hour_label, raw.rows(), outcome.report, var};
}

int cmd_cv(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o);
    const fs::path dir = output_dir(o);
    if (!o.per_hour) {
        const auto r = cv_hour(in, o, o.hour, dir / "cv_report.json");
        out << "cv: hour=" << r.hour << " method=" << to_string(r.report.method)
            << " mean_rmse=" << r.report.mean_rmse << " mean_r2=" << r.report.mean_r2 << '\n';
        return kOk;
    }

    std::set<int> present;
    for (const auto& row : in.flows.rows) present.insert(parse_clock(row.hour));
    std::vector<std::string> hours;
    for (int h = 5; h <= 22; ++h)
        if (present.contains(h * 60)) hours.push_back(format_clock(h * 60));
    if (hours.empty()) throw ConfigError("flows contain none of the hours 05:00-22:00");

    // Each job owns its own file; the table below is assembled in hour order.
    std::vector<HourResult> results(hours.size());
    auto job = [&](std::size_t i) {
        std::string tag = hours[i];
        tag.erase(std::remove(tag.begin(), tag.end(), ':'), tag.end());
        results[i] = cv_hour(in, o, hours[i], dir / ("cv_report_" + tag + ".json"));
    };
    if (o.parallel) {
        parallel_for(hours.size(), job);
    } else {
        for (std::size_t i = 0; i < hours.size(); ++i) job(i);
    }

    std::ofstream csv(dir / "cv_by_hour.csv");
    csv << "hour,m,method,lambda,threshold_b,lag_kb,threshold_v,lag_kv,mean_rmse,mean_r2,variability\n";
    csv << std::setprecision(17);
    json rows = json::array();
    auto cell = [&](const auto& v) {
        if (v) csv << *v;
        csv << ',';
    };
    for (const auto& r : results) {
        const auto& h = r.report.chosen_hyper;
        csv << r.hour << ',' << r.m << ',' << to_string(r.report.method) << ',';
        cell(h.lambda);
        cell(h.threshold_b);
        cell(h.lag_kb);
        cell(h.threshold_v);
        cell(h.lag_kv);
        csv << r.report.mean_rmse << ',' << r.report.mean_r2 << ',' << r.variability << '\n';
        rows.push_back({{"hour", r.hour}, {"m", r.m}, {"method", to_string(r.report.method)},
                        {"hyper", to_json(h)}, {"mean_rmse", r.report.mean_rmse},
                        {"mean_r2", r.report.mean_r2}, {"variability", r.variability}});
    }
    if (!csv) throw Error("cannot write " + (dir / "cv_by_hour.csv").string());
    write_json(dir / "cv_by_hour.json",
               {{"command", "cv"},
                {"config", {{"inputs", inputs_json(o)}, {"method", method_json(o)},
                            {"out", o.out}, {"per_hour", true}}},
                {"hours", rows}});
    for (const auto& r : results)
        out << "cv: hour=" << r.hour << " mean_rmse=" << r.report.mean_rmse
            << " mean_r2=" << r.report.mean_r2 << '\n';
    return kOk;
}

std::vector<double> parse_thresholds(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--thresholds expects lo:step:hi, got '" + spec + "'");
        }
    }
    if (parts.size() != 3 || !(parts[1] > 0) || parts[2] < parts[0])
        throw ConfigError("--thresholds expects lo:step:hi with step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = parts[0] + static_cast<double>(i) * parts[1];
    return out;
}

struct LoadedFit {
    FitResult fit;
    Standardization standardization;
    std::string hour;
};

LoadedFit load_fit(const std::string& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("missing fit file: " + path);
    const json j = read_json(path);
    try {
        return {fit_from_json(j.at("fit")), standardization_from_json(j.at("standardization")),
                j.at("dataset").at("hour").get<std::string>()};
    } catch (const json::exception& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

int cmd_stats(const Options& o, std::ostream& out) {
    const auto thresholds = parse_thresholds(o.thresholds);
    std::optional<LoadedFit> lf;
    if (!o.fit_path.empty()) lf = load_fit(o.fit_path);
    const Inputs in = load_inputs(o);
    const Dataset raw = build_dataset(in, o, o.hour);
    Dataset ds = raw;
    if (lf) {
        if (lf->hour != raw.hour_label)
            throw ConfigError("fit was trained for hour " + lf->hour + ", not " + raw.hour_label);
        if (lf->fit.coefficients.size() != raw.cols() || lf->standardization.mean.size() != raw.cols())
            throw ConfigError("fit has " + std::to_string(lf->fit.coefficients.size()) +
                              " coefficients but the dataset has " + std::to_string(raw.cols()) +
                              " columns");
        ds = apply_standardization(raw, lf->standardization);
    }
    const auto rep = build_stats_report(ds, lf ? &lf->fit : nullptr, thresholds);
    const fs::path dir = output_dir(o);
    json cfg{{"inputs", inputs_json(o)}, {"thresholds", o.thresholds}, {"fit", o.fit_path},
             {"out", o.out}};
    write_json(dir / "stats.json",
               {{"command", "stats"}, {"config", cfg}, {"dataset", dataset_summary(raw)},
                {"stats", to_json(rep)}});
    std::ofstream csv(dir / "g_curve.csv");
    csv << "threshold,count\n" << std::setprecision(17);
    for (const auto& [t, c] : rep.g_curve) csv << t << ',' << c << '\n';
    if (!csv) throw Error("cannot write " + (dir / "g_curve.csv").string());
    out << "stats: hour=" << raw.hour_label << " variability=" << rep.variability
        << " rho=" << rep.responsiveness;
    if (rep.p_value) out << " F=" << *rep.f_statistic << " p=" << *rep.p_value;
    out << '\n';
    return kOk;
}

int cmd_heatmap(const Options& o, std::ostream& out) {
    if (o.fit_path.empty()) throw ConfigError("heatmap needs --fit FILE");
    const LoadedFit lf = load_fit(o.fit_path);
    const Inputs in = load_inputs(o);
    const Dataset raw = build_dataset(in, o, lf.hour);
    if (lf.fit.coefficients.size() != raw.cols())
        throw ConfigError("fit and dataset disagree on the column count");
    const std::vector<double> coefs =
        o.raw_units ? lf.fit.destandardize(lf.standardization).coefficients : lf.fit.coefficients;
    const auto w = segment_weights(coefs, raw.column_map, raw.segment_count());
    const auto norm = normalize_weights(w);
    const fs::path dir = output_dir(o);
    write_heatmap_csv(dir / "heatmap.csv", raw.segment_labels, w, norm);
    const bool geo = write_heatmap_geojson(dir / "heatmap.geojson", in.graph, w, norm);
    out << "heatmap: hour=" << lf.hour << " segments=" << w.size()
        << (norm.degenerate ? " (all weights equal)" : "") << (geo ? "" : " (no geometry; CSV only)")
        << '\n';
    return kOk;
}

// ----------------------------------------------------------------- flags

void add_inputs(CLI::App* app, Options& o) {
    app->add_option("--data", o.data_dir, "Directory holding travel_times.csv, flows.csv, network.json");
    app->add_option("--travel-times", o.travel_path, "Travel-time CSV (overrides --data)");
    app->add_option("--flows", o.flows_path, "Flow CSV (overrides --data)");
    app->add_option("--network", o.network_path, "Network JSON (overrides --data)");
    app->add_option("--health-threshold", o.health_threshold, "Minimum detector health");
    app->add_option("--exclude-days", o.exclude_days, "File of ISO dates to drop");
    app->add_option("--hour", o.hour, "Hour of day, HH:MM");
    app->add_option("--lags", o.p, "Number of lags p")->check(CLI::NonNegativeNumber);
    app->add_option("--delta", o.delta, "Lag width in minutes")->check(CLI::PositiveNumber);
    app->add_option("--out", o.out, "Output directory");
}

void add_method(CLI::App* app, Options& o) {
    app->add_option("--method", o.method, "Estimator")
        ->check(CLI::IsMember({"mle", "lasso", "ridge", "stepwise", "betweenness", "speed"}));
    app->add_option("--lambda", o.lambda, "Penalty weight")->check(CLI::NonNegativeNumber);
    app->add_flag("--lambda-auto", o.lambda_auto, "Choose the hyperparameter by cross-validation");
    app->add_option("--threshold-b", o.threshold_b, "Minimum betweenness");
    app->add_option("--lag-kb", o.lag_kb, "Lag used by betweenness selection");
    app->add_option("--threshold-v", o.threshold_v, "Maximum average speed (mph)");
    app->add_option("--lag-kv", o.lag_kv, "Lag used by speed selection");
    app->add_option("--grid-points", o.grid_points, "Lambda grid size")->check(CLI::PositiveNumber);
    app->add_option("--max-steps", o.max_steps, "Forward-stepwise step limit");
    app->add_option("--folds", o.folds, "Cross-validation folds");
    app->add_option("--seed", o.seed, "Fold seed");
}

int classify(const std::exception& e) {
    if (dynamic_cast<const NotConverged*>(&e) || dynamic_cast<const SingularHessian*>(&e) ||
        dynamic_cast<const BoundaryFraction*>(&e) || dynamic_cast<const InsufficientDof*>(&e))
        return kSolverFailure;
    if (dynamic_cast<const Error*>(&e)) return kConfigError;
    return kInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Modal-split prediction from lagged travel times"};
    app.set_config("--config", "", "TOML/INI file with option defaults");
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Write a synthetic scenario");
    gen->add_option("--out", o.out, "Output directory");
    gen->add_option("--seed", o.seed, "Generator seed");
    gen->add_option("--days", o.days, "Number of days m");
    gen->add_option("--segments", o.segments, "Number of driving segments");
    gen->add_option("--lags", o.p, "Number of lags p")->check(CLI::NonNegativeNumber);
    gen->add_option("--delta", o.delta, "Lag width in minutes")->check(CLI::PositiveNumber);
    gen->add_option("--hours", o.hours, "Hours to generate")->delimiter(',');
    gen->add_option("--support-size", o.support_size, "True nonzero coefficients");
    gen->add_option("--total-travelers", o.total_travelers, "Travelers per day");
    gen->add_option("--intercept", o.intercept, "True intercept");

    auto* fit = app.add_subcommand("fit", "Fit one hour and export weights");
    add_inputs(fit, o);
    add_method(fit, o);

    auto* cv = app.add_subcommand("cv", "Cross-validated accuracy");
    add_inputs(cv, o);
    add_method(cv, o);
    cv->add_flag("--per-hour", o.per_hour, "Loop over 05:00-22:00");
    cv->add_flag("--parallel", o.parallel, "Run hours concurrently");

    auto* step = app.add_subcommand("stepwise", "Forward-stepwise selection");
    add_inputs(step, o);
    add_method(step, o);

    auto* st = app.add_subcommand("stats", "Variability, responsiveness and F-test");
    add_inputs(st, o);
    st->add_option("--fit", o.fit_path, "fit.json for the F-test");
    st->add_option("--thresholds", o.thresholds, "g-curve grid lo:step:hi");

    auto* heat = app.add_subcommand("heatmap", "Per-segment weights for mapping");
    add_inputs(heat, o);
    heat->add_option("--fit", o.fit_path, "fit.json to export")->required();
    heat->add_flag("--raw-units", o.raw_units, "Use raw-unit coefficients");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (*gen) return cmd_generate(o, out);
        if (*fit) return cmd_fit(o, out, "fit");
        if (*cv) return cmd_cv(o, out);
        if (*step) {
            o.method = "stepwise";
            return cmd_fit(o, out, "stepwise");
        }
        if (*st) return cmd_stats(o, out);
        if (*heat) return cmd_heatmap(o, out);
    } catch (const std::exception& e) {
        const int code = classify(e);
        err << (code == kSolverFailure ? "solver failure: " : "error: ") << e.what() << '\n';
        return code;
    }
    return kInternal;
}

}  // namespace msk::cli
