#ifndef ASSEMBLY_CONFIG_HPP
#define ASSEMBLY_CONFIG_HPP

// Experiment configuration: a flat `key = value` text file with dotted keys.
// Blank lines and `#` comments are ignored. Defaults reproduce the annealing
// experiment (N = 30, T = 10, dt = 0.1, eps = 3, r_m = 2, B = 2,
// u in [0, 50], M = 100).

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "integrators.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "potential.hpp"
#include "schedule.hpp"
#include "verifier.hpp"

namespace assembly {

enum class SourceKind { optimize, newton, constant, file };

/// Where a temperature schedule comes from: `optimize`, `newton`,
/// `constant[:u]` or `file[:path]`.
struct ScheduleSource {
    SourceKind kind = SourceKind::optimize;
    std::string argument;  // value after ':' if given

    static ScheduleSource parse(std::string_view text) {
        const auto colon = text.find(':');
        const std::string_view head = text.substr(0, colon);
        ScheduleSource s;
        if (colon != std::string_view::npos) s.argument = std::string(text.substr(colon + 1));
        if (head == "optimize") s.kind = SourceKind::optimize;
        else if (head == "newton") s.kind = SourceKind::newton;
        else if (head == "constant") s.kind = SourceKind::constant;
        else if (head == "file") s.kind = SourceKind::file;
        else throw ConfigError("unknown schedule source '" + std::string(text) + "'");
        if ((s.kind == SourceKind::optimize || s.kind == SourceKind::newton) && !s.argument.empty()) {
            throw ConfigError("schedule source '" + std::string(head) + "' takes no argument");
        }
        return s;
    }

    std::string str() const {
        static constexpr const char* names[] = {"optimize", "newton", "constant", "file"};
        std::string out = names[static_cast<int>(kind)];
        if (!argument.empty()) out += ':' + argument;
        return out;
    }

    bool operator==(const ScheduleSource&) const = default;
};

struct ExperimentConfig {
    SystemParams params{30, 2.0, 3.0, 2.0, true};
    double horizon = 10.0;
    std::size_t steps = 100;
    InitialDistribution init;
    std::string init_file;  // optional explicit initial state

    ScheduleSource source;
    double constant_u = 0.0;
    std::string schedule_file;
    double u_min = 0.0;
    double u_max = 50.0;
    bool monotone = true;
    double newton_u0 = 50.0;
    double newton_uenv = 0.0;
    double newton_rate = 0.0;  // 0 = auto

    std::size_t samples = 100;
    int max_iterations = 500;
    double tolerance = 1e-6;
    ControlVariable variable = ControlVariable::automatic;

    ScheduleSource compare_a{SourceKind::optimize, {}};
    ScheduleSource compare_b{SourceKind::newton, {}};
    std::size_t holdout = 200;

    std::uint64_t seed_train = 1;
    std::uint64_t seed_holdout = 2;

    bool noise = true;
    double v_tol = kDefaultSpeedTolerance;
    double f_tol = kDefaultForceTolerance;

    std::string out_dir = "out";
    bool svg = true;

    TimeGrid grid() const { return TimeGrid::uniform(horizon, steps); }

    double cooling_rate() const { return newton_rate > 0.0 ? newton_rate : default_cooling_rate(horizon); }

    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

inline bool parse_bool(std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

inline std::uint64_t parse_unsigned(std::string_view v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

inline std::pair<double, double> parse_range(std::string_view v) {
    const auto comma = v.find(',');
    if (comma == std::string_view::npos) throw ConfigError("expected 'lo,hi', got '" + std::string(v) + "'");
    return {io::parse_double(v.substr(0, comma)), io::parse_double(v.substr(comma + 1))};
}

inline std::string range_str(double lo, double hi) { return io::format_double(lo) + ',' + io::format_double(hi); }

struct Field {
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class Get, class Set>
Field real(Get get, Set set) {
    return {[set](ExperimentConfig& c, std::string_view v) { set(c, io::parse_double(v)); },
            [get](const ExperimentConfig& c) { return io::format_double(get(c)); }};
}

inline const std::map<std::string, Field>& fields() {
    using C = ExperimentConfig;
    static const std::map<std::string, Field> table = {
        {"system.n",
         {[](C& c, std::string_view v) {
              const auto n = parse_unsigned(v);
              if (n < 1 || n > 100000) throw ConfigError("must be in [1, 100000]");
              c.params.n_particles = static_cast<int>(n);
          },
          [](const C& c) { return std::to_string(c.params.n_particles); }}},
        {"system.b", real([](const C& c) { return c.params.damping; }, [](C& c, double v) { c.params.damping = v; })},
        {"system.interactions",
         {[](C& c, std::string_view v) { c.params.interactions = parse_bool(v); },
          [](const C& c) { return std::string(c.params.interactions ? "true" : "false"); }}},
        {"lj.epsilon", real([](const C& c) { return c.params.lj_depth; }, [](C& c, double v) { c.params.lj_depth = v; })},
        {"lj.rmin", real([](const C& c) { return c.params.lj_rmin; }, [](C& c, double v) { c.params.lj_rmin = v; })},
        {"grid.horizon", real([](const C& c) { return c.horizon; }, [](C& c, double v) { c.horizon = v; })},
        {"grid.steps",
         {[](C& c, std::string_view v) { c.steps = parse_unsigned(v); },
          [](const C& c) { return std::to_string(c.steps); }}},
        {"init.box",
         {[](C& c, std::string_view v) { std::tie(c.init.box_lo, c.init.box_hi) = parse_range(v); },
          [](const C& c) { return range_str(c.init.box_lo, c.init.box_hi); }}},
        {"init.velocity",
         {[](C& c, std::string_view v) {
              if (v == "gaussian") c.init.velocity = VelocityLaw::gaussian;
              else if (v == "uniform") c.init.velocity = VelocityLaw::uniform;
              else throw ConfigError("expected gaussian or uniform");
          },
          [](const C& c) {
              return std::string(c.init.velocity == VelocityLaw::gaussian ? "gaussian" : "uniform");
          }}},
        {"init.vel_variance",
         real([](const C& c) { return c.init.vel_variance; }, [](C& c, double v) { c.init.vel_variance = v; })},
        {"init.vel_range",
         {[](C& c, std::string_view v) { std::tie(c.init.vel_lo, c.init.vel_hi) = parse_range(v); },
          [](const C& c) { return range_str(c.init.vel_lo, c.init.vel_hi); }}},
        {"init.min_separation",
         real([](const C& c) { return c.init.min_separation; }, [](C& c, double v) { c.init.min_separation = v; })},
        {"init.file",
         {[](C& c, std::string_view v) { c.init_file = std::string(v); }, [](const C& c) { return c.init_file; }}},
        {"control.source",
         {[](C& c, std::string_view v) { c.source = ScheduleSource::parse(v); },
          [](const C& c) { return c.source.str(); }}},
        {"control.constant", real([](const C& c) { return c.constant_u; }, [](C& c, double v) { c.constant_u = v; })},
        {"control.file",
         {[](C& c, std::string_view v) { c.schedule_file = std::string(v); },
          [](const C& c) { return c.schedule_file; }}},
        {"control.umin", real([](const C& c) { return c.u_min; }, [](C& c, double v) { c.u_min = v; })},
        {"control.umax", real([](const C& c) { return c.u_max; }, [](C& c, double v) { c.u_max = v; })},
        {"control.monotone",
         {[](C& c, std::string_view v) { c.monotone = parse_bool(v); },
          [](const C& c) { return std::string(c.monotone ? "true" : "false"); }}},
        {"control.newton_u0", real([](const C& c) { return c.newton_u0; }, [](C& c, double v) { c.newton_u0 = v; })},
        {"control.newton_uenv",
         real([](const C& c) { return c.newton_uenv; }, [](C& c, double v) { c.newton_uenv = v; })},
        {"control.newton_rate",
         {[](C& c, std::string_view v) { c.newton_rate = v == "auto" ? 0.0 : io::parse_double(v); },
          [](const C& c) { return c.newton_rate > 0.0 ? io::format_double(c.newton_rate) : std::string("auto"); }}},
        {"solver.samples",
         {[](C& c, std::string_view v) { c.samples = parse_unsigned(v); },
          [](const C& c) { return std::to_string(c.samples); }}},
        {"solver.max_iter",
         {[](C& c, std::string_view v) { c.max_iterations = static_cast<int>(parse_unsigned(v)); },
          [](const C& c) { return std::to_string(c.max_iterations); }}},
        {"solver.tol", real([](const C& c) { return c.tolerance; }, [](C& c, double v) { c.tolerance = v; })},
        {"solver.variable",
         {[](C& c, std::string_view v) {
              if (v == "auto") c.variable = ControlVariable::automatic;
              else if (v == "temperature") c.variable = ControlVariable::temperature;
              else if (v == "sqrt") c.variable = ControlVariable::root_temperature;
              else throw ConfigError("expected auto, temperature or sqrt");
          },
          [](const C& c) {
              switch (c.variable) {
                  case ControlVariable::temperature: return std::string("temperature");
                  case ControlVariable::root_temperature: return std::string("sqrt");
                  default: return std::string("auto");
              }
          }}},
        {"compare.a",
         {[](C& c, std::string_view v) { c.compare_a = ScheduleSource::parse(v); },
          [](const C& c) { return c.compare_a.str(); }}},
        {"compare.b",
         {[](C& c, std::string_view v) { c.compare_b = ScheduleSource::parse(v); },
          [](const C& c) { return c.compare_b.str(); }}},
        {"eval.holdout",
         {[](C& c, std::string_view v) { c.holdout = parse_unsigned(v); },
          [](const C& c) { return std::to_string(c.holdout); }}},
        {"seed.train",
         {[](C& c, std::string_view v) { c.seed_train = parse_unsigned(v); },
          [](const C& c) { return std::to_string(c.seed_train); }}},
        {"seed.holdout",
         {[](C& c, std::string_view v) { c.seed_holdout = parse_unsigned(v); },
          [](const C& c) { return std::to_string(c.seed_holdout); }}},
        {"sim.noise",
         {[](C& c, std::string_view v) { c.noise = parse_bool(v); },
          [](const C& c) { return std::string(c.noise ? "true" : "false"); }}},
        {"verify.v_tol", real([](const C& c) { return c.v_tol; }, [](C& c, double v) { c.v_tol = v; })},
        {"verify.f_tol", real([](const C& c) { return c.f_tol; }, [](C& c, double v) { c.f_tol = v; })},
        {"out.dir",
         {[](C& c, std::string_view v) { c.out_dir = std::string(v); }, [](const C& c) { return c.out_dir; }}},
        {"out.svg",
         {[](C& c, std::string_view v) { c.svg = parse_bool(v); },
          [](const C& c) { return std::string(c.svg ? "true" : "false"); }}},
    };
    return table;
}

}  // namespace config_detail

/// Applies one `key=value` assignment; `origin` prefixes error messages.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                          const std::string& origin) {
    const auto& table = config_detail::fields();
    const auto it = table.find(std::string(key));
    if (it == table.end()) throw ConfigError(origin + ": unknown key '" + std::string(key) + "'");
    try {
        it->second.set(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + std::string(key) + ": " + e.what());
    }
}

/// Applies a `key=value` override as given on the command line.
inline void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
    apply_setting(cfg, config_detail::trim(assignment.substr(0, eq)), config_detail::trim(assignment.substr(eq + 1)),
                  "--set");
}

/// Parses config text on top of the defaults. Does not validate.
inline ExperimentConfig parse_config(std::string_view text, const std::string& origin = "config") {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string content = config_detail::trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        const std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        apply_setting(cfg, config_detail::trim(std::string_view(content).substr(0, eq)),
                      config_detail::trim(std::string_view(content).substr(eq + 1)), where);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

/// Canonical form: every key, sorted, one `key = value` per line.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [key, field] : config_detail::fields()) out += key + " = " + field.get(cfg) + '\n';
    return out;
}

inline void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
    try {
        params.validate();
    } catch (const ConfigError& e) {
        fail("system/lj", e.what());
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("grid.horizon", "must be positive");
    if (steps > 10'000'000) fail("grid.steps", "must be at most 1e7");
    try {
        init.validate();
    } catch (const ConfigError& e) {
        fail("init", e.what());
    }
    if (!init_file.empty() && !std::filesystem::exists(init_file)) fail("init.file", "file not found: " + init_file);
    if (!(u_min >= 0.0) || !std::isfinite(u_min)) fail("control.umin", "must be non-negative");
    if (!(u_max >= u_min) || !std::isfinite(u_max)) fail("control.umax", "must be >= control.umin");
    if (!(constant_u >= 0.0) || !std::isfinite(constant_u)) fail("control.constant", "must be non-negative");
    if (!(newton_uenv >= 0.0) || !(newton_u0 >= newton_uenv) || !std::isfinite(newton_u0)) {
        fail("control.newton_u0", "cooling requires newton_u0 >= newton_uenv >= 0");
    }
    if (newton_rate < 0.0 || !std::isfinite(newton_rate)) fail("control.newton_rate", "must be positive or auto");
    for (const auto* src : {&source, &compare_a, &compare_b}) {
        if (src->kind == SourceKind::file) {
            const std::string path = src->argument.empty() ? schedule_file : src->argument;
            if (path.empty()) fail("control.file", "schedule source 'file' needs a path");
            if (!std::filesystem::exists(path)) fail("control.file", "file not found: " + path);
        }
        if (src->kind == SourceKind::constant && !src->argument.empty()) {
            const double u = io::parse_double(src->argument);
            if (!(u >= 0.0)) fail("control.source", "constant temperature must be non-negative");
        }
    }
    if (samples < 1) fail("solver.samples", "must be >= 1");
    if (max_iterations < 0) fail("solver.max_iter", "must be >= 0");
    if (!(tolerance >= 0.0)) fail("solver.tol", "must be >= 0");
    if (holdout < 1) fail("eval.holdout", "must be >= 1");
    if (seed_train == seed_holdout) fail("seed.holdout", "must differ from seed.train");
    if (!(v_tol > 0.0)) fail("verify.v_tol", "must be positive");
    if (!(f_tol > 0.0)) fail("verify.f_tol", "must be positive");
    if (out_dir.empty()) fail("out.dir", "must not be empty");
}

}  // namespace assembly

#endif
