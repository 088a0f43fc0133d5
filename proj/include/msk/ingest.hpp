#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "msk/types.hpp"

namespace msk {

struct TravelTimeRow {
    std::string day;       // ISO-8601 date
    std::string segment;   // segment label as in network.json
    int interval_start = 0;  // minutes after midnight
    std::optional<double> speed_mph;
    std::optional<double> health;
};

struct RawTravelTimeTable {
    std::vector<TravelTimeRow> rows;
};

struct FlowRow {
    std::string day;
    std::string hour;  // HH:00
    std::int64_t q_drive = 0;
    std::int64_t q_transit = 0;
};

struct RawFlowTable {
    std::vector<FlowRow> rows;
};

// "HH:MM" <-> minutes after midnight.
int parse_clock(const std::string& text);
std::string format_clock(int minutes);
bool is_iso_date(const std::string& text);

/// Reads travel_times.csv; speeds of rows whose health is below the
/// threshold are cleared. Rows without a health value are kept as-is.
RawTravelTimeTable load_travel_times(const std::filesystem::path& path, double health_threshold);
RawTravelTimeTable parse_travel_times(std::istream& in, double health_threshold);
void write_travel_times(const std::filesystem::path& path, const RawTravelTimeTable& table);

RawFlowTable load_flows(const std::filesystem::path& path);
RawFlowTable parse_flows(std::istream& in);
void write_flows(const std::filesystem::path& path, const RawFlowTable& table);

NetworkGraph load_network(const std::filesystem::path& path);
NetworkGraph parse_network(const std::string& json_text);
void write_network(const std::filesystem::path& path, const NetworkGraph& graph);

std::set<std::string> load_exclude_days(const std::filesystem::path& path);
std::set<std::string> parse_exclude_days(std::istream& in);

struct DroppedRow {
    std::string day;
    std::string segment;
    int interval_start = 0;
};

struct ImputeResult {
    RawTravelTimeTable table;
    std::size_t imputed = 0;
    std::vector<DroppedRow> dropped;
};

/// Fills each missing speed from the nearest observed driving segments
/// upstream and downstream in the same (day, interval). The nearest side is
/// the closest hop distance with at least one observation; values at that
/// distance are averaged. Both sides present: their mean. One side: that
/// side. Neither: the row is dropped and listed.
ImputeResult impute_missing_speeds(const RawTravelTimeTable& table, const NetworkGraph& graph);

struct AssembleReport {
    std::vector<std::string> incomplete_days;
    std::vector<std::string> excluded_days;
};

/// Builds the lagged design for one hour. Lag k covers
/// [hour_start - k*delta, hour_start - k*delta + delta); readings inside a
/// bucket are averaged. Columns are segment-major, lag-ascending; values are
/// travel times in minutes.
Dataset assemble_dataset(const RawTravelTimeTable& travel, const RawFlowTable& flows,
                         const NetworkGraph& graph, const std::string& hour, const LagSpec& lags,
                         const std::set<std::string>& exclude_days,
                         AssembleReport* report = nullptr);

Standardization compute_standardization(const Matrix& x);

/// Applies a fixed (mean, scale) to x. Records it on the result, composed
/// with any standardization already present so raw units stay recoverable.
Dataset apply_standardization(const Dataset& ds, const Standardization& st);

/// Column-wise z-score with divisor m. Constant columns are centered and get
/// scale 1.
Dataset standardize(const Dataset& ds);

}  // namespace msk
