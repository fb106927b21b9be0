#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynamics.hpp"
#include "model.hpp"

namespace ladder {

/// Pulse area that fully transfers one ladder step: integral of f dt = pi/(2 d).
inline double required_area(double d) {
    if (!(d > 0.0) || !std::isfinite(d))
        throw std::invalid_argument("required_area: oscillator strength must be positive");
    return M_PI / (2.0 * d);
}

/// Peak amplitude that gives a pulse of the required area for its shape.
inline double calibrated_amplitude(EnvelopeShape shape, double d, double duration_ns) {
    if (!(duration_ns > 0.0) || !std::isfinite(duration_ns))
        throw std::invalid_argument("calibrated_amplitude: duration must be positive");
    const double area = required_area(d);
    return shape == EnvelopeShape::square ? area / duration_ns : 2.0 * area / duration_ns;
}

/// Sequential pi/(2 d_n)-area pulses 1..N-1, one per transition, separated by
/// gap_ns of free evolution (default back to back).
inline Schedule build_inversion_schedule(const LadderSystem& sys,
                                         const std::vector<double>& durations_ns,
                                         EnvelopeShape shape, double gap_ns = 0.0) {
    const auto sysv = validate_system(sys);
    if (!sysv.empty())
        throw std::invalid_argument("build_inversion_schedule: invalid system: " +
                                    sysv.front().field + ": " + sysv.front().rule);
    const int n = sys.n_levels();
    if (static_cast<int>(durations_ns.size()) != n - 1)
        throw std::invalid_argument("build_inversion_schedule: expected one duration per transition");
    std::vector<PulseSpec> pulses;
    pulses.reserve(durations_ns.size());
    for (int k = 1; k <= n - 1; ++k) {
        const double dt = durations_ns[k - 1];
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::invalid_argument("build_inversion_schedule: durations must be positive");
        Envelope env;
        env.shape = shape;
        env.duration_ns = dt;
        env.amplitude = calibrated_amplitude(shape, sys.osc_strengths[k - 1], dt);
        pulses.push_back({k, env});
    }
    return make_contiguous_schedule(pulses, gap_ns);
}

/// Inversion yield rho_NN - rho_11 (diagonal entries are real for any valid state).
inline double yield_metric(const DensityMatrix& dm) {
    const int n = dm.dim();
    if (n < 2) throw std::invalid_argument("yield_metric: state must have at least two levels");
    return dm.rho(n - 1, n - 1).real() - dm.rho(0, 0).real();
}

/// Time integral of rho_nn over the trajectory (trapezoid rule), in ns.
inline double occupancy(const Trajectory& traj, int level) {
    if (traj.size() == 0) throw std::invalid_argument("occupancy: empty trajectory");
    const int n = static_cast<int>(traj.populations.front().size());
    if (level < 1 || level > n) throw std::invalid_argument("occupancy: level index out of range");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double dt = traj.times_ns[i + 1] - traj.times_ns[i];
        acc += 0.5 * dt * (traj.populations[i][level - 1] + traj.populations[i + 1][level - 1]);
    }
    return acc;
}

/// True when the durations of the upper two pulses dominate the lower two:
/// dt2 + dt3 > 3 (dt1 + dt2). Defined for three-pulse (four-level) runs.
inline bool check_ratio_heuristic(const std::vector<double>& durations_ns) {
    if (durations_ns.size() != 3)
        throw std::invalid_argument("check_ratio_heuristic: defined for exactly three pulses");
    return durations_ns[1] + durations_ns[2] > 3.0 * (durations_ns[0] + durations_ns[1]);
}

struct YieldReport {
    double yield = 0.0;
    std::vector<double> populations;   // final rho_nn
    std::vector<double> occupancy_ns;  // per level
};

inline YieldReport make_yield_report(const Trajectory& traj) {
    if (traj.size() == 0) throw std::invalid_argument("make_yield_report: empty trajectory");
    YieldReport rep;
    const auto& fin = traj.populations.back();
    rep.populations.assign(fin.data(), fin.data() + fin.size());
    rep.yield = rep.populations.back() - rep.populations.front();
    rep.occupancy_ns.resize(fin.size());
    for (int k = 1; k <= static_cast<int>(fin.size()); ++k)
        rep.occupancy_ns[k - 1] = occupancy(traj, k);
    return rep;
}

}
