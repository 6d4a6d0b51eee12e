#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "critnet/economy.hpp"
#include "critnet/errors.hpp"
#include "critnet/graph.hpp"
#include "critnet/stats.hpp"

namespace critnet {

/// Shortest decimal form with 15 significant digits, dot separator, no
/// locale dependence.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.15g", value);
    return buffer;
}

inline std::string format_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[24];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buffer;
}

inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(context + ": cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

inline std::int64_t parse_int64(std::string_view text, const std::string& context) {
    std::int64_t value = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError(context + ": cannot parse integer '" + std::string(text) + "'");
    }
    return value;
}

namespace detail {

inline std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t' ||
                             text.front() == '\r')) {
        text.remove_prefix(1);
    }
    while (!text.empty() &&
           (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return text;
}

/// Comma splitter honoring double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::string(trim(current)));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::string(trim(current)));
    return fields;
}

/// ISO-8601 calendar date -> comparable code y*10000 + m*100 + d.
inline std::int32_t parse_iso_date(std::string_view text, std::size_t row) {
    const auto fail = [&]() {
        throw DataError("row " + std::to_string(row) + ": unparseable date '" +
                        std::string(text) + "' (expected YYYY-MM-DD)");
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
    std::int32_t y = 0, m = 0, d = 0;
    for (int i : {0, 1, 2, 3}) {
        const char c = text[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') fail();
        y = y * 10 + (c - '0');
    }
    for (int i : {5, 6}) {
        const char c = text[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') fail();
        m = m * 10 + (c - '0');
    }
    for (int i : {8, 9}) {
        const char c = text[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') fail();
        d = d * 10 + (c - '0');
    }
    if (m < 1 || m > 12 || d < 1 || d > 31) fail();
    return y * 10000 + m * 100 + d;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

/// Daily index levels keyed by strictly increasing calendar dates. Rows
/// whose close was missing, unparseable, or non-positive are dropped and
/// counted in `dropped_rows`.
struct IndexDataset {
    std::string name;
    std::vector<std::string> dates;
    std::vector<double> closes;
    std::size_t dropped_rows = 0;
};

inline IndexDataset ingest_csv(const std::filesystem::path& path,
                               const std::string& date_column,
                               const std::string& close_column,
                               std::size_t min_rows = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("'" + path.string() + "': empty file, header row required");
    }
    const std::vector<std::string> header = detail::split_csv_line(line);
    std::optional<std::size_t> date_idx, close_idx;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == date_column) date_idx = i;
        if (header[i] == close_column) close_idx = i;
    }
    if (!date_idx) throw DataError("'" + path.string() + "': missing column '" + date_column + "'");
    if (!close_idx) throw DataError("'" + path.string() + "': missing column '" + close_column + "'");

    IndexDataset dataset;
    dataset.name = path.stem().string();
    std::int32_t previous_date = std::numeric_limits<std::int32_t>::min();
    std::size_t row = 1;
    while (std::getline(in, line)) {
        row += 1;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (*date_idx >= fields.size() || fields[*date_idx].empty()) {
            throw DataError("row " + std::to_string(row) + ": missing date value");
        }
        const std::int32_t date_code = detail::parse_iso_date(fields[*date_idx], row);
        double close = 0.0;
        bool usable = *close_idx < fields.size() && !fields[*close_idx].empty();
        if (usable) {
            const std::string& text = fields[*close_idx];
            const char* end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, close);
            usable = ec == std::errc() && ptr == end && close > 0.0;
        }
        if (!usable) {
            dataset.dropped_rows += 1;
            continue;
        }
        if (date_code <= previous_date) {
            throw DataError("row " + std::to_string(row) + ": non-monotonic dates ('" +
                            fields[*date_idx] + "' does not increase)");
        }
        previous_date = date_code;
        dataset.dates.push_back(fields[*date_idx]);
        dataset.closes.push_back(close);
    }
    if (dataset.closes.size() < min_rows) {
        throw InsufficientDataError("'" + path.string() + "': " +
                                    std::to_string(dataset.closes.size()) +
                                    " usable rows, need " + std::to_string(min_rows));
    }
    return dataset;
}

inline void write_index_csv(const std::filesystem::path& path,
                            const std::vector<IndexSample>& series) {
    std::ofstream out = detail::open_output(path);
    out << "step,U_t,alpha_mean\n";
    for (const IndexSample& s : series) {
        out << s.step << ',' << format_double(s.index_value) << ','
            << format_double(s.alpha_mean) << '\n';
    }
}

inline void write_avalanche_csv(const std::filesystem::path& path,
                                const std::vector<AvalancheRecord>& avalanches) {
    std::ofstream out = detail::open_output(path);
    out << "trigger_step,size_s,node_count_r,edges_removed\n";
    for (const AvalancheRecord& a : avalanches) {
        out << a.trigger_step << ',' << a.size_s << ',' << a.node_count_r << ','
            << a.edges_removed << '\n';
    }
}

/// Edge list with one source,target line per unit of multiplicity, sorted,
/// preceded by a single summary header line.
inline void write_graph_snapshot(const std::filesystem::path& path, const TradeGraph& graph,
                                 std::uint64_t step) {
    std::ofstream out = detail::open_output(path);
    out << "# agents=" << graph.n_agents() << " edges=" << graph.n_edges()
        << " step=" << step << '\n';
    std::vector<std::pair<AgentId, AgentId>> edges;
    edges.reserve(static_cast<std::size_t>(graph.n_edges()));
    graph.for_each_edge([&](AgentId source, AgentId target, std::int64_t multiplicity) {
        for (std::int64_t c = 0; c < multiplicity; ++c) edges.emplace_back(source, target);
    });
    std::sort(edges.begin(), edges.end());
    for (const auto& [source, target] : edges) {
        out << source << ',' << target << '\n';
    }
}

inline void write_drawdown_csv(const std::filesystem::path& path,
                               const std::vector<DrawdownEvent>& events) {
    std::ofstream out = detail::open_output(path);
    out << "start_index,end_index,length,magnitude\n";
    for (const DrawdownEvent& e : events) {
        out << e.start_index << ',' << e.end_index << ',' << e.length << ','
            << format_double(e.magnitude) << '\n';
    }
}

inline void write_ccdf_csv(const std::filesystem::path& path,
                           const std::vector<std::pair<double, double>>& points,
                           const std::string& x_name) {
    std::ofstream out = detail::open_output(path);
    out << x_name << ",ccdf\n";
    for (const auto& [x, p] : points) {
        out << format_double(x) << ',' << format_double(p) << '\n';
    }
}

inline const char* to_string(FitMethod method) {
    return method == FitMethod::mle ? "mle" : "ccdf";
}

inline FitMethod fit_method_from_string(std::string_view name) {
    if (name == "mle") return FitMethod::mle;
    if (name == "ccdf") return FitMethod::ccdf_regression;
    throw ConfigError("unknown fit method '" + std::string(name) +
                      "' (expected ccdf or mle)");
}

inline void write_fit_report(
    const std::filesystem::path& path, const PowerLawFit& fit,
    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    std::ofstream out = detail::open_output(path);
    out << "method=" << to_string(fit.method) << '\n';
    out << "exponent=" << format_double(fit.exponent) << '\n';
    out << "ccdf_slope=" << format_double(fit.ccdf_slope) << '\n';
    out << "xmin=" << format_double(fit.xmin) << '\n';
    if (fit.method == FitMethod::ccdf_regression) {
        out << "r_squared=" << format_double(fit.r_squared) << '\n';
    } else {
        out << "log_likelihood=" << format_double(fit.log_likelihood) << '\n';
    }
    out << "n_points=" << fit.n_points << '\n';
    for (const auto& [key, value] : extra) {
        out << key << '=' << value << '\n';
    }
}

/// Ordered key=value record describing one run; writing and re-reading it
/// reproduces the run bit-exactly.
struct RunManifest {
    std::vector<std::pair<std::string, std::string>> entries;

    void set(const std::string& key, std::string value) {
        for (auto& [k, v] : entries) {
            if (k == key) {
                v = std::move(value);
                return;
            }
        }
        entries.emplace_back(key, std::move(value));
    }

    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    std::ofstream out = detail::open_output(path);
    for (const auto& [key, value] : manifest.entries) {
        out << key << '=' << value << '\n';
    }
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    RunManifest manifest;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        row += 1;
        const std::string_view text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw DataError("'" + path.string() + "' line " + std::to_string(row) +
                            ": expected key=value");
        }
        manifest.set(std::string(detail::trim(text.substr(0, eq))),
                     std::string(detail::trim(text.substr(eq + 1))));
    }
    return manifest;
}

} // namespace critnet
