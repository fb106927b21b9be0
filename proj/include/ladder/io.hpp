#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "protocol.hpp"
#include "version.hpp"

namespace ladder {

/// FNV-1a 64-bit hash as 16 hex digits; used for config provenance stamps.
inline std::string fnv1a_hex(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest-round-trip style formatting with 12 significant digits; all data
/// files use this so identical runs produce identical bytes.
inline std::string format_g12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline void write_provenance_comment(std::ostream& os, const std::string& config_hash) {
    os << "# config_hash=" << (config_hash.empty() ? "unspecified" : config_hash)
       << " version=" << version_string << "\n";
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

inline void finish_out(std::ofstream& os, const std::string& path) {
    os.flush();
    if (!os) throw IoError("write to '" + path + "' failed");
}

}  // namespace detail

/// Columns: t_ns, rho11..rhoNN, yield. One row per sampled instant.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const std::string& config_hash) {
    if (traj.size() == 0) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
    auto os = detail::open_out(path);
    write_provenance_comment(os, config_hash);
    const int n = static_cast<int>(traj.populations.front().size());
    os << "t_ns";
    for (int k = 1; k <= n; ++k) os << ",rho" << k << k;
    os << ",yield\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << format_g12(traj.times_ns[i]);
        for (int k = 0; k < n; ++k) os << ',' << format_g12(traj.populations[i][k]);
        os << ',' << format_g12(traj.populations[i][n - 1] - traj.populations[i][0]) << '\n';
    }
    detail::finish_out(os, path);
}

/// Columns: t_ns, amp1..ampK (envelope of each scheduled pulse, zero outside
/// its window), sampled uniformly with n_samples instants.
inline void write_pulse_csv(const std::string& path, const Schedule& sched, int n_samples,
                            const std::string& config_hash) {
    if (n_samples < 2) throw std::invalid_argument("write_pulse_csv: need at least two samples");
    auto os = detail::open_out(path);
    write_provenance_comment(os, config_hash);
    os << "t_ns";
    for (std::size_t k = 1; k <= sched.pulses.size(); ++k) os << ",amp" << k;
    os << '\n';
    for (int i = 0; i < n_samples; ++i) {
        const double t = sched.total_time_ns * i / (n_samples - 1);
        os << format_g12(t);
        for (const auto& tp : sched.pulses)
            os << ',' << format_g12(tp.pulse.envelope.value(t - tp.start_ns));
        os << '\n';
    }
    detail::finish_out(os, path);
}

inline nlohmann::json yield_report_to_json(const YieldReport& rep) {
    return nlohmann::json{{"yield", rep.yield},
                          {"populations", rep.populations},
                          {"occupancy_ns", rep.occupancy_ns}};
}

inline void write_yield_json(const std::string& path, const YieldReport& rep,
                             const std::string& config_hash) {
    auto j = yield_report_to_json(rep);
    j["config_hash"] = config_hash.empty() ? "unspecified" : config_hash;
    j["version"] = version_string;
    auto os = detail::open_out(path);
    os << j.dump(2) << '\n';
    detail::finish_out(os, path);
}

/// Full sampled density matrices, row-major, entries as [re, im] pairs.
inline void write_states_json(const std::string& path, const Trajectory& traj,
                              const std::string& config_hash) {
    nlohmann::json j;
    j["config_hash"] = config_hash.empty() ? "unspecified" : config_hash;
    j["version"] = version_string;
    j["times_ns"] = traj.times_ns;
    auto& states = j["states"] = nlohmann::json::array();
    for (const auto& m : traj.states) {
        nlohmann::json flat = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                flat.push_back({m(r, c).real(), m(r, c).imag()});
        states.push_back(std::move(flat));
    }
    auto os = detail::open_out(path);
    os << j.dump(2) << '\n';
    detail::finish_out(os, path);
}

}
