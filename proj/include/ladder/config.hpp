#pragma once

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "model.hpp"

namespace ladder {

enum class Command { simulate, sweep, optimize, validate };

struct NumericsConfig {
    double step_divisor = 2000.0;
    int sample_count = 500;
    int threads = 0;  // 0: one per hardware thread
};

struct OutputConfig {
    std::string directory = ".";
    bool write_states = false;
};

struct PulsesConfig {
    EnvelopeShape shape = EnvelopeShape::square;
    std::vector<double> ratios;        // exactly one of ratios/durations is set
    std::vector<double> durations_ns;
    double total_time_ns = 0.0;
    double gap_ns = 0.0;
};

struct SweepSpec {
    std::vector<double> total_times_ns;            // empty: default grid times
    std::vector<std::vector<double>> ratio_sets;   // empty: default ratio sets
};

struct RunConfig {
    LadderSystem system;
    PulsesConfig pulses;
    std::optional<SweepSpec> sweep;
    NumericsConfig numerics;
    OutputConfig output;
};

/// Rb ladder, 1:1:3 split over 30 ns, square pulses. Used when no config
/// file is given.
inline RunConfig default_run_config() {
    RunConfig cfg;
    cfg.system = rb_four_level();
    cfg.pulses.ratios = {1.0, 1.0, 3.0};
    cfg.pulses.total_time_ns = 30.0;
    return cfg;
}

namespace detail {

[[noreturn]] inline void cfg_fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config error at '" + path + "': " + msg);
}

inline void expect_object(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) cfg_fail(path, "expected an object");
}

inline const nlohmann::json& require_key(const nlohmann::json& j, const std::string& path,
                                         const char* key) {
    expect_object(j, path);
    const auto it = j.find(key);
    if (it == j.end()) cfg_fail(path.empty() ? key : path + "." + key, "missing required key");
    return *it;
}

inline void reject_unknown(const nlohmann::json& j, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    expect_object(j, path);
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known |= key == a;
        if (!known) cfg_fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

inline double as_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) cfg_fail(path, "expected a number");
    return j.get<double>();
}

inline int as_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) cfg_fail(path, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string()) cfg_fail(path, "expected a string");
    return j.get<std::string>();
}

inline std::vector<double> as_positive_array(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) cfg_fail(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const double v = as_number(j[i], path + "[" + std::to_string(i) + "]");
        if (!(v > 0.0) || !std::isfinite(v))
            cfg_fail(path + "[" + std::to_string(i) + "]", "must be positive and finite");
        out.push_back(v);
    }
    return out;
}

}  // namespace detail

inline EnvelopeShape shape_from_string(const std::string& s, const std::string& path = "shape") {
    if (s == "square") return EnvelopeShape::square;
    if (s == "raised_cosine") return EnvelopeShape::raised_cosine;
    detail::cfg_fail(path, "expected 'square' or 'raised_cosine', got '" + s + "'");
}

inline LadderSystem system_from_json(const nlohmann::json& j, const std::string& path = "system") {
    using namespace detail;
    reject_unknown(j, path, {"levels", "transitions", "lifetimes"});
    LadderSystem sys;

    const auto& levels = require_key(j, path, "levels");
    if (!levels.is_array()) cfg_fail(path + ".levels", "expected an array");
    bool any_label = false;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const std::string lp = path + ".levels[" + std::to_string(i) + "]";
        reject_unknown(levels[i], lp, {"label", "energy"});
        sys.energies.push_back(as_number(require_key(levels[i], lp, "energy"), lp + ".energy"));
        if (levels[i].contains("label")) {
            any_label = true;
            sys.labels.push_back(as_string(levels[i]["label"], lp + ".label"));
        } else {
            sys.labels.push_back("");
        }
    }
    if (!any_label) sys.labels.clear();

    const auto& transitions = require_key(j, path, "transitions");
    if (!transitions.is_array()) cfg_fail(path + ".transitions", "expected an array");
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const std::string tp = path + ".transitions[" + std::to_string(i) + "]";
        reject_unknown(transitions[i], tp, {"d"});
        sys.osc_strengths.push_back(as_number(require_key(transitions[i], tp, "d"), tp + ".d"));
    }

    const auto& lifetimes = require_key(j, path, "lifetimes");
    if (!lifetimes.is_array()) cfg_fail(path + ".lifetimes", "expected an array");
    for (std::size_t i = 0; i < lifetimes.size(); ++i) {
        const std::string lp = path + ".lifetimes[" + std::to_string(i) + "]";
        if (lifetimes[i].is_null())
            sys.lifetimes_ns.push_back(infinite_lifetime);
        else
            sys.lifetimes_ns.push_back(as_number(lifetimes[i], lp));
    }
    return sys;
}

inline PulsesConfig pulses_from_json(const nlohmann::json& j, int n_levels,
                                     const std::string& path = "pulses") {
    using namespace detail;
    reject_unknown(j, path, {"shape", "ratios", "durations", "total_time", "gap"});
    PulsesConfig p;
    if (j.contains("shape")) p.shape = shape_from_string(as_string(j["shape"], path + ".shape"),
                                                         path + ".shape");
    if (j.contains("gap")) {
        p.gap_ns = as_number(j["gap"], path + ".gap");
        if (p.gap_ns < 0.0 || !std::isfinite(p.gap_ns))
            cfg_fail(path + ".gap", "must be finite and >= 0");
    }

    const bool has_ratios = j.contains("ratios");
    const bool has_durations = j.contains("durations");
    if (has_ratios == has_durations)
        cfg_fail(path, "exactly one of 'ratios' or 'durations' is required");

    const int want = n_levels - 1;
    if (has_ratios) {
        p.ratios = as_positive_array(j["ratios"], path + ".ratios");
        if (static_cast<int>(p.ratios.size()) != want)
            cfg_fail(path + ".ratios", "expected " + std::to_string(want) +
                                           " entries (one per transition)");
        p.total_time_ns = as_number(require_key(j, path, "total_time"), path + ".total_time");
        if (!(p.total_time_ns > 0.0) || !std::isfinite(p.total_time_ns))
            cfg_fail(path + ".total_time", "must be positive and finite");
    } else {
        p.durations_ns = as_positive_array(j["durations"], path + ".durations");
        if (static_cast<int>(p.durations_ns.size()) != want)
            cfg_fail(path + ".durations", "expected " + std::to_string(want) +
                                              " entries (one per transition)");
        double total = p.gap_ns * (p.durations_ns.size() - 1);
        for (double d : p.durations_ns) total += d;
        if (j.contains("total_time")) {
            const double given = as_number(j["total_time"], path + ".total_time");
            if (std::abs(given - total) > 1e-9 * std::max(1.0, total))
                cfg_fail(path + ".total_time", "inconsistent with durations and gap");
        }
        p.total_time_ns = total;
    }
    return p;
}

inline SweepSpec sweep_from_json(const nlohmann::json& j, int n_levels,
                                 const std::string& path = "sweep") {
    using namespace detail;
    reject_unknown(j, path, {"total_times", "ratio_sets"});
    SweepSpec spec;
    if (j.contains("total_times"))
        spec.total_times_ns = as_positive_array(j["total_times"], path + ".total_times");
    if (j.contains("ratio_sets")) {
        const auto& sets = j["ratio_sets"];
        if (!sets.is_array() || sets.empty())
            cfg_fail(path + ".ratio_sets", "expected a non-empty array of ratio arrays");
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const std::string sp = path + ".ratio_sets[" + std::to_string(i) + "]";
            auto r = as_positive_array(sets[i], sp);
            if (static_cast<int>(r.size()) != n_levels - 1)
                cfg_fail(sp, "expected " + std::to_string(n_levels - 1) +
                                 " entries (one per transition)");
            spec.ratio_sets.push_back(std::move(r));
        }
    }
    return spec;
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using namespace detail;
    reject_unknown(j, "", {"system", "pulses", "sweep", "numerics", "output"});
    RunConfig cfg;
    cfg.system = system_from_json(require_key(j, "", "system"));

    const auto violations = validate_system(cfg.system);
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) {
            if (!msg.empty()) msg += "; ";
            msg += v.field + ": " + v.rule;
        }
        cfg_fail("system", msg);
    }

    cfg.pulses = pulses_from_json(require_key(j, "", "pulses"), cfg.system.n_levels());

    if (j.contains("sweep"))
        cfg.sweep = sweep_from_json(j["sweep"], cfg.system.n_levels());

    if (j.contains("numerics")) {
        const auto& n = j["numerics"];
        reject_unknown(n, "numerics", {"step_divisor", "sample_count", "threads"});
        if (n.contains("step_divisor")) {
            cfg.numerics.step_divisor = as_number(n["step_divisor"], "numerics.step_divisor");
            if (!(cfg.numerics.step_divisor > 0.0))
                cfg_fail("numerics.step_divisor", "must be positive");
        }
        if (n.contains("sample_count")) {
            cfg.numerics.sample_count = as_int(n["sample_count"], "numerics.sample_count");
            if (cfg.numerics.sample_count < 2)
                cfg_fail("numerics.sample_count", "must be at least 2");
        }
        if (n.contains("threads")) {
            cfg.numerics.threads = as_int(n["threads"], "numerics.threads");
            if (cfg.numerics.threads < 0) cfg_fail("numerics.threads", "must be >= 0");
        }
    }

    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown(o, "output", {"directory", "write_states"});
        if (o.contains("directory")) {
            cfg.output.directory = as_string(o["directory"], "output.directory");
            if (cfg.output.directory.empty()) cfg_fail("output.directory", "must not be empty");
        }
        if (o.contains("write_states")) {
            if (!o["write_states"].is_boolean())
                cfg_fail("output.write_states", "expected a boolean");
            cfg.output.write_states = o["write_states"].get<bool>();
        }
    }
    return cfg;
}

inline RunConfig parse_run_config_file(const std::string& file_path) {
    std::ifstream is(file_path);
    if (!is) throw ConfigError("cannot open config file '" + file_path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in '" + file_path + "': " + e.what());
    }
    return parse_run_config(j);
}

inline nlohmann::json to_json(const LadderSystem& sys) {
    nlohmann::json levels = nlohmann::json::array();
    for (int i = 0; i < sys.n_levels(); ++i) {
        nlohmann::json lvl{{"energy", sys.energies[i]}};
        if (!sys.labels.empty() && !sys.labels[i].empty()) lvl["label"] = sys.labels[i];
        levels.push_back(std::move(lvl));
    }
    nlohmann::json transitions = nlohmann::json::array();
    for (double d : sys.osc_strengths) transitions.push_back({{"d", d}});
    nlohmann::json lifetimes = nlohmann::json::array();
    for (double tau : sys.lifetimes_ns) {
        if (std::isinf(tau))
            lifetimes.push_back(nullptr);
        else
            lifetimes.push_back(tau);
    }
    return {{"levels", levels}, {"transitions", transitions}, {"lifetimes", lifetimes}};
}

inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["system"] = to_json(cfg.system);

    nlohmann::json pulses{{"shape", shape_name(cfg.pulses.shape)},
                          {"total_time", cfg.pulses.total_time_ns},
                          {"gap", cfg.pulses.gap_ns}};
    if (!cfg.pulses.ratios.empty())
        pulses["ratios"] = cfg.pulses.ratios;
    else
        pulses["durations"] = cfg.pulses.durations_ns;
    j["pulses"] = std::move(pulses);

    if (cfg.sweep) {
        nlohmann::json sweep = nlohmann::json::object();
        if (!cfg.sweep->total_times_ns.empty()) sweep["total_times"] = cfg.sweep->total_times_ns;
        if (!cfg.sweep->ratio_sets.empty()) sweep["ratio_sets"] = cfg.sweep->ratio_sets;
        j["sweep"] = std::move(sweep);
    }

    j["numerics"] = {{"step_divisor", cfg.numerics.step_divisor},
                     {"sample_count", cfg.numerics.sample_count},
                     {"threads", cfg.numerics.threads}};
    j["output"] = {{"directory", cfg.output.directory},
                   {"write_states", cfg.output.write_states}};
    return j;
}

/// Provenance hash of the effective config (canonical key-sorted dump).
/// The worker thread count is excluded: results never depend on it, so the
/// same experiment gets the same stamp at any concurrency level.
inline std::string config_hash(const nlohmann::json& j) { return fnv1a_hex(j.dump()); }

inline std::string config_hash(const RunConfig& cfg) {
    auto j = to_json(cfg);
    j["numerics"].erase("threads");
    return config_hash(j);
}

}
