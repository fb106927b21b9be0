#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"
#include "model.hpp"

namespace ladder {

// state invariants enforced at every sampled instant
inline constexpr double trace_tolerance = 1e-7;
inline constexpr double psd_tolerance = 1e-7;
inline constexpr double hermiticity_tolerance = 1e-9;

/// Spontaneous decay |from> -> |to> at the given rate (1/ns). Levels 1-based.
struct DecayChannel {
    int from_level = 2;
    int to_level = 1;
    double rate = 0.0;
};

/// Cascade channels L_n = |n><n+1| with Gamma = 1/tau_{n+1}; stable levels
/// (infinite tau) contribute no channel.
inline std::vector<DecayChannel> lindblad_channels(const LadderSystem& sys) {
    const int n = sys.n_levels();
    if (static_cast<int>(sys.lifetimes_ns.size()) != n - 1)
        throw std::invalid_argument("lindblad_channels: expected one lifetime per level 2..N");
    std::vector<DecayChannel> out;
    for (int k = 1; k <= n - 1; ++k) {
        const double rate = sys.decay_rate_of_level(k + 1);
        if (rate > 0.0) out.push_back({k + 1, k, rate});
    }
    return out;
}

/// Rotating-frame Hamiltonian of one resonant pulse at pulse-local time t:
/// H = f(t) * d_n * (|n><n+1| + |n+1><n|). Off-resonant levels idle.
inline CMatrix rwa_hamiltonian(const LadderSystem& sys, const PulseSpec& pulse, double t_ns) {
    const int n = sys.n_levels();
    const int k = pulse.transition;
    if (k < 1 || k > n - 1)
        throw std::invalid_argument("rwa_hamiltonian: transition index out of range");
    if (!(t_ns >= 0.0) || t_ns > pulse.envelope.duration_ns)
        throw std::domain_error("rwa_hamiltonian: t outside pulse support");
    CMatrix h = CMatrix::Zero(n, n);
    const double c = pulse.envelope.value(t_ns) * sys.osc_strengths[k - 1];
    h(k - 1, k) = c;
    h(k, k - 1) = c;
    return h;
}

namespace detail {

inline std::string num_str(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// drho/dt = -i[h, rho] + sum_k Gamma_k (L rho L^+ - 1/2 {L^+L, rho}) with the
// cascade channels written out entrywise (L = |to><from| touches one row, one
// column and one diagonal entry). `h == nullptr` means no drive. `tmp` is
// caller-provided scratch of the same shape.
inline void master_rhs_into(const CMatrix& rho, const CMatrix* h,
                            const std::vector<DecayChannel>& channels, CMatrix& out,
                            CMatrix& tmp) {
    if (h) {
        tmp.noalias() = (*h) * rho;
        out.noalias() = rho * (*h);
        out = std::complex<double>(0.0, -1.0) * (tmp - out);
    } else {
        out.setZero();
    }
    for (const auto& ch : channels) {
        const int f = ch.from_level - 1;
        const int to = ch.to_level - 1;
        out.row(f) -= (0.5 * ch.rate) * rho.row(f);
        out.col(f) -= (0.5 * ch.rate) * rho.col(f);
        out(to, to) += ch.rate * rho(f, f);
    }
}

struct Segment {
    double start = 0.0;
    double end = 0.0;
    const TimedPulse* pulse = nullptr;  // nullptr: free evolution
};

inline std::vector<Segment> build_segments(const Schedule& sched) {
    const double eps = 1e-9 * std::max(1.0, sched.total_time_ns);
    std::vector<Segment> segs;
    double cursor = 0.0;
    for (const auto& tp : sched.pulses) {
        if (tp.start_ns < cursor - eps)
            throw std::invalid_argument("propagate: pulses overlap or are out of order");
        if (tp.start_ns > cursor + eps) segs.push_back({cursor, tp.start_ns, nullptr});
        segs.push_back({std::max(cursor, tp.start_ns), tp.end_ns(), &tp});
        cursor = tp.end_ns();
    }
    if (cursor > sched.total_time_ns + eps)
        throw std::invalid_argument("propagate: schedule total time shorter than last pulse end");
    if (sched.total_time_ns > cursor + eps) segs.push_back({cursor, sched.total_time_ns, nullptr});
    if (!segs.empty()) segs.back().end = sched.total_time_ns;
    return segs;
}

inline void check_common_preconditions(const DensityMatrix& rho0, const Schedule& sched,
                                       const LadderSystem& sys) {
    const auto sysv = validate_system(sys);
    if (!sysv.empty())
        throw std::invalid_argument("propagate: invalid system: " + sysv.front().field + ": " +
                                    sysv.front().rule);
    if (rho0.dim() != sys.n_levels())
        throw std::invalid_argument("propagate: initial state dimension does not match system");
    const auto rv = rho0.violations(trace_tolerance, psd_tolerance, hermiticity_tolerance);
    if (!rv.empty())
        throw std::invalid_argument("propagate: invalid initial state: " + rv.front().rule);
    if (!(sched.total_time_ns >= 0.0) || !std::isfinite(sched.total_time_ns))
        throw std::invalid_argument("propagate: total time must be finite and >= 0");
    for (const auto& tp : sched.pulses) {
        if (tp.pulse.transition < 1 || tp.pulse.transition > sys.n_levels() - 1)
            throw std::invalid_argument("propagate: pulse transition index out of range");
        if (!(tp.pulse.envelope.duration_ns > 0.0))
            throw std::invalid_argument("propagate: pulse durations must be positive");
    }
}

// throws IntegrationError naming the first violated invariant and the time
inline void check_sampled_state(const DensityMatrix& dm, double t_ns) {
    const auto v = dm.violations(trace_tolerance, psd_tolerance, hermiticity_tolerance);
    if (!v.empty())
        throw IntegrationError(
            "integration failed at t = " + num_str(t_ns) + " ns: " + v.front().rule, t_ns);
}

}  // namespace detail

/// Right-hand side of the Lindblad master equation for one instant.
inline CMatrix master_rhs(const CMatrix& rho, const CMatrix& h,
                          const std::vector<DecayChannel>& channels) {
    const auto n = rho.rows();
    if (rho.cols() != n || h.rows() != n || h.cols() != n)
        throw std::invalid_argument("master_rhs: rho and h must be square with equal size");
    for (const auto& ch : channels)
        if (ch.from_level < 1 || ch.from_level > n || ch.to_level < 1 || ch.to_level > n)
            throw std::invalid_argument("master_rhs: channel level out of range");
    CMatrix out(n, n), tmp(n, n);
    detail::master_rhs_into(rho, &h, channels, out, tmp);
    return out;
}

/// Sampled trajectory. States are stored as sampled, never renormalized.
struct Trajectory {
    std::vector<double> times_ns;
    std::vector<CMatrix> states;
    std::vector<Eigen::VectorXd> populations;

    std::size_t size() const { return times_ns.size(); }
    const CMatrix& final_state() const { return states.back(); }
    double final_time() const { return times_ns.back(); }
};

/// Step and sampling defaults: step = shortest pulse duration / step_divisor,
/// sample_count instants spread uniformly over [0, T_f].
struct StepPolicy {
    double step_divisor = 2000.0;
    int sample_count = 500;
};

inline double policy_step(const Schedule& sched, const StepPolicy& policy) {
    if (!(policy.step_divisor > 0.0))
        throw std::invalid_argument("policy_step: step divisor must be positive");
    const double base =
        sched.pulses.empty() ? sched.total_time_ns : sched.min_pulse_duration();
    return base / policy.step_divisor;
}

inline double policy_sample_interval(const Schedule& sched, const StepPolicy& policy) {
    if (policy.sample_count < 2)
        throw std::invalid_argument("policy_sample_interval: need at least two samples");
    return sched.total_time_ns / (policy.sample_count - 1);
}

/// Fixed-step RK4 integration of the master equation over the schedule.
/// Integrates each pulse/gap segment separately so envelope discontinuities
/// never fall inside a step. Records the state at t = 0, roughly every
/// sample_every_ns, and at T_f; every recorded state is checked against the
/// trace/hermiticity/positivity invariants.
inline Trajectory propagate(const DensityMatrix& rho0, const Schedule& sched,
                            const LadderSystem& sys, double step_ns, double sample_every_ns) {
    detail::check_common_preconditions(rho0, sched, sys);
    if (!(step_ns > 0.0) || !std::isfinite(step_ns))
        throw std::invalid_argument("propagate: step must be positive and finite");
    if (!(sample_every_ns > 0.0) || !std::isfinite(sample_every_ns))
        throw std::invalid_argument("propagate: sample interval must be positive and finite");
    for (const auto& tp : sched.pulses)
        if (step_ns > tp.pulse.envelope.duration_ns / 100.0 * (1.0 + 1e-12))
            throw std::invalid_argument(
                "propagate: step exceeds 1/100 of the shortest pulse duration");

    const int n = sys.n_levels();
    const auto channels = lindblad_channels(sys);
    const auto segments = detail::build_segments(sched);
    const double eps = 1e-9 * std::max(1.0, sched.total_time_ns);

    Trajectory traj;
    CMatrix rho = rho0.rho;
    CMatrix hbuf(n, n), tmp(n, n), work(n, n);
    CMatrix k1(n, n), k2(n, n), k3(n, n), k4(n, n);

    auto record = [&](double t) {
        DensityMatrix dm(rho);
        detail::check_sampled_state(dm, t);
        traj.times_ns.push_back(t);
        traj.populations.push_back(dm.populations());
        traj.states.push_back(std::move(dm.rho));
    };

    record(0.0);
    double next_sample = sample_every_ns;

    for (const auto& seg : segments) {
        const double len = seg.end - seg.start;
        if (len <= eps) continue;

        const bool driven = seg.pulse != nullptr;
        const Envelope* env = driven ? &seg.pulse->pulse.envelope : nullptr;
        const double pulse_start = driven ? seg.pulse->start_ns : 0.0;
        const bool const_h = driven && env->shape == EnvelopeShape::square;
        CMatrix coupling;
        if (driven) {
            const int k = seg.pulse->pulse.transition - 1;
            coupling = CMatrix::Zero(n, n);
            coupling(k, k + 1) = coupling(k + 1, k) = sys.osc_strengths[k];
            if (const_h) hbuf = env->amplitude * coupling;
        }

        auto rhs = [&](double t_abs, const CMatrix& r, CMatrix& out) {
            const CMatrix* hp = nullptr;
            if (driven) {
                if (!const_h) hbuf = env->value(t_abs - pulse_start) * coupling;
                hp = &hbuf;
            }
            detail::master_rhs_into(r, hp, channels, out, tmp);
        };

        long n_steps = static_cast<long>(std::ceil(len / step_ns - 1e-12));
        if (n_steps < 1) n_steps = 1;
        const double h = len / static_cast<double>(n_steps);
        for (long i = 0; i < n_steps; ++i) {
            const double t0 = seg.start + i * h;
            const double t1 = (i + 1 == n_steps) ? seg.end : t0 + h;
            const double dt = t1 - t0;

            rhs(t0, rho, k1);
            work = rho + (0.5 * dt) * k1;
            rhs(t0 + 0.5 * dt, work, k2);
            work = rho + (0.5 * dt) * k2;
            rhs(t0 + 0.5 * dt, work, k3);
            work = rho + dt * k3;
            rhs(t1, work, k4);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            if (t1 >= next_sample - eps && t1 < sched.total_time_ns - eps) {
                record(t1);
                next_sample =
                    sample_every_ns * (std::floor(t1 / sample_every_ns + 1e-9) + 1.0);
            }
        }
    }

    if (traj.times_ns.back() != sched.total_time_ns) record(sched.total_time_ns);
    return traj;
}

inline Trajectory propagate_with_policy(const DensityMatrix& rho0, const Schedule& sched,
                                        const LadderSystem& sys, const StepPolicy& policy = {}) {
    return propagate(rho0, sched, sys, policy_step(sched, policy),
                     policy_sample_interval(sched, policy));
}

/// Column-stacking Liouvillian superoperator (n^2 x n^2) of -i[h, .] plus the
/// cascade dissipator: vec(A X B) = (B^T (x) A) vec(X).
inline CMatrix liouvillian(const CMatrix& h, const std::vector<DecayChannel>& channels) {
    const auto n = h.rows();
    if (h.cols() != n) throw std::invalid_argument("liouvillian: h must be square");
    const CMatrix id = CMatrix::Identity(n, n);
    CMatrix sup = std::complex<double>(0.0, -1.0) *
                  (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id));
    for (const auto& ch : channels) {
        CMatrix lk = CMatrix::Zero(n, n);
        lk(ch.to_level - 1, ch.from_level - 1) = 1.0;
        const CMatrix ldl = lk.adjoint() * lk;
        sup += ch.rate * (Eigen::kroneckerProduct(lk.conjugate(), lk).eval() -
                          0.5 * Eigen::kroneckerProduct(id, ldl).eval() -
                          0.5 * Eigen::kroneckerProduct(ldl.transpose(), id).eval());
    }
    return sup;
}

/// Independent reference propagator: exact matrix exponential of the
/// Liouvillian on each piecewise-constant segment. Square envelopes only.
/// sample_every_ns <= 0 records segment boundaries only.
inline Trajectory propagate_expm(const DensityMatrix& rho0, const Schedule& sched,
                                 const LadderSystem& sys, double sample_every_ns = 0.0) {
    detail::check_common_preconditions(rho0, sched, sys);
    for (const auto& tp : sched.pulses)
        if (tp.pulse.envelope.shape != EnvelopeShape::square)
            throw std::invalid_argument(
                "propagate_expm: only square envelopes are piecewise constant; got " +
                std::string(shape_name(tp.pulse.envelope.shape)));

    const int n = sys.n_levels();
    const auto channels = lindblad_channels(sys);
    const auto segments = detail::build_segments(sched);
    const double eps = 1e-9 * std::max(1.0, sched.total_time_ns);

    Trajectory traj;
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.rho.data(), n * n);

    auto record = [&](const Eigen::VectorXcd& vec, double t) {
        DensityMatrix dm(Eigen::Map<const CMatrix>(vec.data(), n, n));
        detail::check_sampled_state(dm, t);
        traj.times_ns.push_back(t);
        traj.populations.push_back(dm.populations());
        traj.states.push_back(std::move(dm.rho));
    };

    record(v, 0.0);
    double next_sample = sample_every_ns > 0.0 ? sample_every_ns : infinite_lifetime;

    for (const auto& seg : segments) {
        const double len = seg.end - seg.start;
        if (len <= eps) continue;
        CMatrix h = CMatrix::Zero(n, n);
        if (seg.pulse) {
            const int k = seg.pulse->pulse.transition - 1;
            const double c = seg.pulse->pulse.envelope.amplitude * sys.osc_strengths[k];
            h(k, k + 1) = h(k + 1, k) = c;
        }
        const CMatrix sup = liouvillian(h, channels);

        while (next_sample < seg.end - eps) {
            if (next_sample > seg.start + eps) {
                const Eigen::VectorXcd vs = ((next_sample - seg.start) * sup).exp() * v;
                record(vs, next_sample);
            }
            next_sample += sample_every_ns;
        }

        v = (len * sup).exp() * v;
        if (seg.end < sched.total_time_ns - eps) record(v, seg.end);
    }

    if (traj.times_ns.back() != sched.total_time_ns) record(v, sched.total_time_ns);
    return traj;
}

}
