#include "msk/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace msk {
namespace {

constexpr const char* kTravelHeader = "day,segment,interval_start,avg_speed_mph,health";
constexpr const char* kFlowHeader = "day,hour,q_drive,q_transit";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_double(const std::string& text, std::size_t line, const char* field) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(line, std::string("bad ") + field + " '" + text + "'");
    return v;
}

std::int64_t parse_count(const std::string& text, std::size_t line, const char* field) {
    std::int64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || v < 0)
        throw ParseError(line, std::string("bad ") + field + " '" + text + "'");
    return v;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::string read_header(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw SchemaError("missing header line");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    return trim(header);
}

Mode parse_mode(const std::string& s) {
    if (s == "driving") return Mode::Driving;
    if (s == "transit") return Mode::Transit;
    throw SchemaError("unknown edge mode '" + s + "'");
}

struct SlotKey {
    std::size_t day;
    std::size_t segment;
    int interval;
    bool operator==(const SlotKey&) const = default;
};

struct SlotHash {
    std::size_t operator()(const SlotKey& k) const noexcept {
        std::size_t h = k.day * 0x9E3779B97F4A7C15ULL;
        h ^= k.segment + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
        h ^= static_cast<std::size_t>(k.interval) + (h << 6) + (h >> 2);
        return h;
    }
};

}  // namespace

int parse_clock(const std::string& text) {
    if (text.size() != 5 || text[2] != ':') throw Error("bad time-of-day '" + text + "'");
    int hh = 0, mm = 0;
    auto r1 = std::from_chars(text.data(), text.data() + 2, hh);
    auto r2 = std::from_chars(text.data() + 3, text.data() + 5, mm);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != text.data() + 2 ||
        r2.ptr != text.data() + 5 || hh < 0 || hh > 23 || mm < 0 || mm > 59)
        throw Error("bad time-of-day '" + text + "'");
    return hh * 60 + mm;
}

std::string format_clock(int minutes) {
    std::ostringstream out;
    out << std::setw(2) << std::setfill('0') << minutes / 60 << ':' << std::setw(2)
        << std::setfill('0') << minutes % 60;
    return out.str();
}

bool is_iso_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    const int month = std::stoi(text.substr(5, 2));
    const int day = std::stoi(text.substr(8, 2));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

RawTravelTimeTable parse_travel_times(std::istream& in, double health_threshold) {
    if (read_header(in) != kTravelHeader)
        throw SchemaError(std::string("travel_times header must be '") + kTravelHeader + "'");
    RawTravelTimeTable table;
    std::string line;
    std::size_t line_no = 1;
    std::set<std::tuple<std::string, std::string, int>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
        TravelTimeRow row;
        row.day = trim(f[0]);
        if (!is_iso_date(row.day)) throw ParseError(line_no, "bad day '" + row.day + "'");
        row.segment = trim(f[1]);
        if (row.segment.empty()) throw ParseError(line_no, "empty segment");
        try {
            row.interval_start = parse_clock(trim(f[2]));
        } catch (const Error&) {
            throw ParseError(line_no, "bad interval_start '" + f[2] + "'");
        }
        const std::string speed = trim(f[3]);
        if (!speed.empty()) {
            const double v = parse_double(speed, line_no, "avg_speed_mph");
            if (!(v > 0.0)) throw ParseError(line_no, "avg_speed_mph must be positive");
            row.speed_mph = v;
        }
        const std::string health = trim(f[4]);
        if (!health.empty()) {
            const double h = parse_double(health, line_no, "health");
            if (h < 0.0 || h > 1.0) throw ParseError(line_no, "health outside [0,1]");
            row.health = h;
        }
        if (!seen.emplace(row.day, row.segment, row.interval_start).second)
            throw ParseError(line_no, "duplicate (day, segment, interval_start)");
        if (row.health && *row.health < health_threshold) row.speed_mph.reset();
        table.rows.push_back(std::move(row));
    }
    return table;
}

RawTravelTimeTable load_travel_times(const std::filesystem::path& path, double health_threshold) {
    auto in = open_or_throw(path);
    return parse_travel_times(in, health_threshold);
}

void write_travel_times(const std::filesystem::path& path, const RawTravelTimeTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << kTravelHeader << '\n';
    out << std::setprecision(17);
    for (const auto& r : table.rows) {
        out << r.day << ',' << r.segment << ',' << format_clock(r.interval_start) << ',';
        if (r.speed_mph) out << *r.speed_mph;
        out << ',';
        if (r.health) out << *r.health;
        out << '\n';
    }
}

RawFlowTable parse_flows(std::istream& in) {
    if (read_header(in) != kFlowHeader)
        throw SchemaError(std::string("flows header must be '") + kFlowHeader + "'");
    RawFlowTable table;
    std::string line;
    std::size_t line_no = 1;
    std::set<std::pair<std::string, std::string>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
        FlowRow row;
        row.day = trim(f[0]);
        if (!is_iso_date(row.day)) throw ParseError(line_no, "bad day '" + row.day + "'");
        row.hour = trim(f[1]);
        try {
            if (parse_clock(row.hour) % 60 != 0) throw Error("not on the hour");
        } catch (const Error&) {
            throw ParseError(line_no, "bad hour '" + row.hour + "'");
        }
        row.q_drive = parse_count(trim(f[2]), line_no, "q_drive");
        row.q_transit = parse_count(trim(f[3]), line_no, "q_transit");
        if (!seen.emplace(row.day, row.hour).second)
            throw ParseError(line_no, "duplicate (day, hour)");
        table.rows.push_back(std::move(row));
    }
    return table;
}

RawFlowTable load_flows(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_flows(in);
}

void write_flows(const std::filesystem::path& path, const RawFlowTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << kFlowHeader << '\n';
    for (const auto& r : table.rows)
        out << r.day << ',' << r.hour << ',' << r.q_drive << ',' << r.q_transit << '\n';
}

NetworkGraph parse_network(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("network.json: ") + e.what());
    }
    NetworkGraph g;
    try {
        for (const auto& n : j.at("nodes")) g.nodes.push_back(n.get<std::string>());
        for (const auto& e : j.at("edges")) {
            Edge edge;
            edge.segment = e.at("segment").get<std::string>();
            edge.tail = e.at("tail").get<std::string>();
            edge.head = e.at("head").get<std::string>();
            edge.length_miles = e.at("length_miles").get<double>();
            edge.mode = parse_mode(e.value("mode", std::string("driving")));
            if (e.contains("geometry")) edge.geometry_json = e.at("geometry").dump();
            g.edges.push_back(std::move(edge));
        }
        for (const auto& o : j.at("origins")) g.origins.push_back(o.get<std::string>());
        for (const auto& d : j.at("destinations")) g.destinations.push_back(d.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("network.json: ") + e.what());
    }
    g.validate();
    return g;
}

NetworkGraph load_network(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

void write_network(const std::filesystem::path& path, const NetworkGraph& graph) {
    nlohmann::json j;
    j["nodes"] = graph.nodes;
    j["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        nlohmann::json je{{"segment", e.segment},
                          {"tail", e.tail},
                          {"head", e.head},
                          {"length_miles", e.length_miles},
                          {"mode", e.mode == Mode::Driving ? "driving" : "transit"}};
        if (!e.geometry_json.empty()) je["geometry"] = nlohmann::json::parse(e.geometry_json);
        j["edges"].push_back(std::move(je));
    }
    j["origins"] = graph.origins;
    j["destinations"] = graph.destinations;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::set<std::string> parse_exclude_days(std::istream& in) {
    std::set<std::string> days;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (!is_iso_date(line)) throw ParseError(line_no, "bad date '" + line + "'");
        days.insert(line);
    }
    return days;
}

std::set<std::string> load_exclude_days(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_exclude_days(in);
}

ImputeResult impute_missing_speeds(const RawTravelTimeTable& table, const NetworkGraph& graph) {
    const auto driving = graph.driving_edges();
    std::unordered_map<std::string, std::size_t> seg_index;
    for (std::size_t i = 0; i < driving.size(); ++i) seg_index.emplace(driving[i]->segment, i);

    // Upstream neighbours end where this segment starts; downstream start
    // where it ends.
    std::vector<std::vector<std::size_t>> upstream(driving.size()), downstream(driving.size());
    for (std::size_t a = 0; a < driving.size(); ++a)
        for (std::size_t b = 0; b < driving.size(); ++b) {
            if (a == b) continue;
            if (driving[b]->head == driving[a]->tail) upstream[a].push_back(b);
            if (driving[b]->tail == driving[a]->head) downstream[a].push_back(b);
        }

    std::map<std::string, std::size_t> day_index;
    for (const auto& r : table.rows) day_index.emplace(r.day, 0);
    {
        std::size_t i = 0;
        for (auto& [day, idx] : day_index) idx = i++;
    }

    std::unordered_map<SlotKey, double, SlotHash> observed;
    for (const auto& r : table.rows) {
        auto it = seg_index.find(r.segment);
        if (it == seg_index.end())
            throw SchemaError("segment '" + r.segment + "' is not a driving segment in the network");
        if (r.speed_mph) observed[{day_index[r.day], it->second, r.interval_start}] = *r.speed_mph;
    }

    auto nearest = [&](std::size_t seg, std::size_t day, int interval,
                       const std::vector<std::vector<std::size_t>>& adj) -> std::optional<double> {
        std::vector<char> visited(driving.size(), 0);
        visited[seg] = 1;
        std::vector<std::size_t> frontier{seg};
        while (!frontier.empty()) {
            std::vector<std::size_t> next;
            for (std::size_t s : frontier)
                for (std::size_t n : adj[s])
                    if (!visited[n]) {
                        visited[n] = 1;
                        next.push_back(n);
                    }
            std::sort(next.begin(), next.end());
            double total = 0.0;
            std::size_t count = 0;
            for (std::size_t n : next)
                if (auto it = observed.find({day, n, interval}); it != observed.end()) {
                    total += it->second;
                    ++count;
                }
            if (count > 0) return total / static_cast<double>(count);
            frontier = std::move(next);
        }
        return std::nullopt;
    };

    ImputeResult result;
    result.table.rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        if (r.speed_mph) {
            result.table.rows.push_back(r);
            continue;
        }
        const std::size_t seg = seg_index.at(r.segment);
        const std::size_t day = day_index.at(r.day);
        const auto up = nearest(seg, day, r.interval_start, upstream);
        const auto down = nearest(seg, day, r.interval_start, downstream);
        if (!up && !down) {
            result.dropped.push_back({r.day, r.segment, r.interval_start});
            continue;
        }
        TravelTimeRow filled = r;
        filled.speed_mph = (up && down) ? 0.5 * (*up + *down) : (up ? *up : *down);
        ++result.imputed;
        result.table.rows.push_back(std::move(filled));
    }
    return result;
}

Dataset assemble_dataset(const RawTravelTimeTable& travel, const RawFlowTable& flows,
                         const NetworkGraph& graph, const std::string& hour, const LagSpec& lags,
                         const std::set<std::string>& exclude_days, AssembleReport* report) {
    lags.validate();
    const int hour_start = parse_clock(hour);
    const auto driving = graph.driving_edges();
    std::unordered_map<std::string, std::size_t> seg_index;
    for (std::size_t i = 0; i < driving.size(); ++i) seg_index.emplace(driving[i]->segment, i);

    std::map<std::string, std::pair<std::int64_t, std::int64_t>> day_counts;
    for (const auto& f : flows.rows)
        if (parse_clock(f.hour) == hour_start) day_counts[f.day] = {f.q_drive, f.q_transit};
    if (day_counts.empty()) throw MissingHour(hour);

    std::map<std::string, std::size_t> day_index;
    for (const auto& [day, counts] : day_counts) day_index.emplace(day, day_index.size());

    const std::size_t n_seg = driving.size();
    const std::size_t n_lag = static_cast<std::size_t>(lags.lag_count());
    const std::size_t D = n_seg * n_lag;
    // Per (day, segment, lag): running sum and count of speeds.
    std::vector<double> speed_sum(day_index.size() * D, 0.0);
    std::vector<int> speed_n(day_index.size() * D, 0);

    for (const auto& r : travel.rows) {
        if (!r.speed_mph) continue;
        auto d = day_index.find(r.day);
        if (d == day_index.end()) continue;
        auto s = seg_index.find(r.segment);
        if (s == seg_index.end()) continue;
        // offset > 0 means the reading starts before hour_start.
        const int offset = hour_start - r.interval_start;
        const int lag = offset <= 0 ? 0 : (offset + lags.delta_minutes - 1) / lags.delta_minutes;
        const int bucket_start = hour_start - lag * lags.delta_minutes;
        if (lag > lags.p || r.interval_start < bucket_start ||
            r.interval_start >= bucket_start + lags.delta_minutes)
            continue;
        const std::size_t slot = d->second * D + s->second * n_lag + static_cast<std::size_t>(lag);
        speed_sum[slot] += *r.speed_mph;
        speed_n[slot] += 1;
    }

    Dataset ds;
    ds.hour_label = format_clock(hour_start);
    ds.lags = lags;
    for (const auto* e : driving) ds.segment_labels.push_back(e->segment);
    for (std::size_t j = 0; j < n_seg; ++j)
        for (std::size_t k = 0; k < n_lag; ++k) ds.column_map.push_back({j, static_cast<int>(k)});

    std::vector<double> values;
    AssembleReport local;
    for (const auto& [day, idx] : day_index) {
        if (exclude_days.count(day)) {
            local.excluded_days.push_back(day);
            continue;
        }
        const auto [q1, q0] = day_counts.at(day);
        bool complete = q1 + q0 > 0;
        for (std::size_t c = 0; c < D && complete; ++c)
            if (speed_n[idx * D + c] == 0) complete = false;
        if (!complete) {
            local.incomplete_days.push_back(day);
            continue;
        }
        for (std::size_t j = 0; j < n_seg; ++j)
            for (std::size_t k = 0; k < n_lag; ++k) {
                const std::size_t c = j * n_lag + k;
                const double speed = speed_sum[idx * D + c] / speed_n[idx * D + c];
                values.push_back(60.0 * driving[j]->length_miles / speed);
            }
        ds.q_drive.push_back(q1);
        ds.q_transit.push_back(q0);
        ds.days.push_back(day);
    }
    if (ds.q_drive.empty()) throw EmptyDataset("no complete days for hour " + hour);
    ds.x = Matrix(ds.q_drive.size(), D, std::move(values));
    if (report) *report = std::move(local);
    return ds;
}

Standardization compute_standardization(const Matrix& x) {
    const std::size_t m = x.rows();
    Standardization st;
    st.mean.assign(x.cols(), 0.0);
    st.scale.assign(x.cols(), 1.0);
    if (m == 0) return st;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m; ++r) mean += x(r, c);
        mean /= static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double d = x(r, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(m));
        st.mean[c] = mean;
        st.scale[c] = sd < 1e-12 ? 1.0 : sd;
    }
    return st;
}

Dataset apply_standardization(const Dataset& ds, const Standardization& st) {
    if (st.mean.size() != ds.cols() || st.scale.size() != ds.cols())
        throw DimensionMismatch("standardization does not match column count");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - st.mean[c]) / st.scale[c];
    }
    if (ds.standardization) {
        // x_std = (x_raw - m0)/s0, then (x_std - m1)/s1 = (x_raw - (m0 + s0 m1)) / (s0 s1).
        Standardization composed = *ds.standardization;
        for (std::size_t c = 0; c < ds.cols(); ++c) {
            composed.mean[c] += composed.scale[c] * st.mean[c];
            composed.scale[c] *= st.scale[c];
        }
        out.standardization = std::move(composed);
    } else {
        out.standardization = st;
    }
    return out;
}

Dataset standardize(const Dataset& ds) {
    if (ds.rows() < 2) throw EmptyDataset("standardization needs at least two rows");
    return apply_standardization(ds, compute_standardization(ds.x));
}

}  // namespace msk
