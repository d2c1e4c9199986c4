#ifndef ASSEMBLY_IO_HPP
#define ASSEMBLY_IO_HPP

// CSV, JSON and SVG artifacts. Numbers are written in shortest round-trip
// form so identical runs produce byte-identical files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "integrators.hpp"
#include "optimizer.hpp"
#include "schedule.hpp"
#include "verifier.hpp"

namespace assembly::io {

inline std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text == "inf") return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string trajectory_csv(const TrajectoryRecord& traj) {
    std::string out = "step,time,particle,x,y,z,vx,vy,vz\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        for (std::size_t i = 0; i < s.size(); ++i) {
            out += std::to_string(k) + ',' + format_double(traj.times[k]) + ',' + std::to_string(i);
            for (double c : s.positions[i]) out += ',' + format_double(c);
            for (double c : s.velocities[i]) out += ',' + format_double(c);
            out += '\n';
        }
    }
    return out;
}

inline std::string summary_csv(const TrajectoryRecord& traj) {
    std::string out = "step,time,hamiltonian,min_pair_distance,u\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out += std::to_string(k) + ',' + format_double(traj.times[k]) + ',' + format_double(traj.hamiltonians[k]) +
               ',' + format_double(traj.min_pair_distance[k]) + ',' +
               format_double(k < traj.controls.size() ? traj.controls[k] : 0.0) + '\n';
    }
    return out;
}

inline std::string schedule_csv(const TemperatureSchedule& schedule, const TimeGrid& grid) {
    std::string out = "step,time,u\n";
    for (std::size_t n = 0; n < schedule.values.size(); ++n) {
        out += std::to_string(n) + ',' + format_double(grid.time(n)) + ',' + format_double(schedule.values[n]) + '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        fields.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

/// Rows of a headed CSV file; the header must match `expected`.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::string_view expected) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != expected) {
        throw ConfigError(path.string() + ": expected header '" + std::string(expected) + "'");
    }
    const auto columns = split(expected, ',').size();
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != columns) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace detail

/// Reads a `step,time,u` file and checks it lies on `grid`.
inline std::vector<double> read_schedule_csv(const std::filesystem::path& path, const TimeGrid& grid) {
    const auto rows = detail::read_csv(path, "step,time,u");
    if (rows.size() != grid.n_points()) {
        throw ConfigError(path.string() + ": schedule has " + std::to_string(rows.size()) + " points, grid has " +
                          std::to_string(grid.n_points()));
    }
    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const double t = parse_double(rows[n][1]);
        if (std::abs(t - grid.time(n)) > 1e-9 * std::max(1.0, grid.horizon())) {
            throw ConfigError(path.string() + ": time column does not match the configured grid at step " +
                              std::to_string(n));
        }
        values.push_back(parse_double(rows[n][2]));
    }
    return values;
}

/// Reads a `particle,x,y,z,vx,vy,vz` initial-state file.
inline SystemState read_state_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv(path, "particle,x,y,z,vx,vy,vz");
    SystemState s;
    for (const auto& r : rows) {
        s.positions.push_back({parse_double(r[1]), parse_double(r[2]), parse_double(r[3])});
        s.velocities.push_back({parse_double(r[4]), parse_double(r[5]), parse_double(r[6])});
    }
    return s;
}

/// Column-oriented CSV for plotting; all columns share the length of `x`.
inline std::string plot_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + format_double(columns[c][r]);
        out += '\n';
    }
    return out;
}

inline nlohmann::json to_json(const TemperatureSchedule& s) {
    return {{"values", s.values}, {"u_min", s.u_min}, {"u_max", s.u_max}, {"monotone", s.monotone_nonincreasing}};
}

inline nlohmann::json to_json(const HoldoutEstimate& h) {
    return {{"mean", h.mean}, {"stderr", h.std_error}, {"samples", h.samples}, {"degenerate", h.degenerate}};
}

inline nlohmann::json to_json(const OptimizationReport& r) {
    nlohmann::json j;
    j["schedule"] = to_json(r.schedule);
    j["objective_history"] = r.objective_history;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["holdout"] = r.holdout ? to_json(*r.holdout) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const ConvergenceReport& r) {
    return {{"h_monotone", r.h_monotone},
            {"worst_violation", r.worst_violation},
            {"terminal_speed", r.terminal_speed},
            {"terminal_force", r.terminal_force},
            {"distance_floor_ok", r.distance_floor_ok},
            {"min_distance", std::isfinite(r.min_distance) ? nlohmann::json(r.min_distance) : nlohmann::json(nullptr)},
            {"distance_floor", r.distance_floor},
            {"equilibrium_reached", r.equilibrium_reached}};
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + '\n'; }

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal self-contained SVG line chart.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                                 const std::vector<Series>& series) {
    constexpr double width = 640, height = 400, left = 70, right = 20, top = 40, bottom = 50;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double x0 = inf, x1 = -inf, y0 = inf, y1 = -inf;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
    if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
    const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
    const auto py = [&](double y) { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); };
    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
        << height - bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (top + height - bottom) / 2 << ")\">" << y_label << "</text>\n";
    for (double f : {0.0, 0.5, 1.0}) {
        out << "<text x=\"" << left - 6 << "\" y=\"" << py(y0 + f * (y1 - y0)) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(y0 + f * (y1 - y0)) << "</text>\n";
        out << "<text x=\"" << px(x0 + f * (x1 - x0)) << "\" y=\"" << height - bottom + 14
            << "\" text-anchor=\"middle\" font-size=\"10\">" << format_double(x0 + f * (x1 - x0)) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % 4];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].y[i])) continue;
            out << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - right - 4 << "\" y=\"" << top + 14 * (s + 1)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << series[s].name << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace assembly::io

#endif
