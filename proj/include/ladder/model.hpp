#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ladder {

using CMatrix = Eigen::MatrixXcd;

inline constexpr double infinite_lifetime = std::numeric_limits<double>::infinity();

enum class EnvelopeShape { square, raised_cosine };

inline const char* shape_name(EnvelopeShape s) {
    return s == EnvelopeShape::square ? "square" : "raised_cosine";
}

/// Pulse envelope f(t) in pulse-local time t in [0, duration].
/// Amplitude is the peak field strength in rad/ns.
struct Envelope {
    EnvelopeShape shape = EnvelopeShape::square;
    double duration_ns = 0.0;
    double amplitude = 0.0;

    // zero outside [0, duration]
    double value(double t_ns) const {
        if (t_ns < 0.0 || t_ns > duration_ns) return 0.0;
        if (shape == EnvelopeShape::square) return amplitude;
        const double s = std::sin(M_PI * t_ns / duration_ns);
        return amplitude * s * s;
    }

    // integral of value over [0, duration], closed form
    double area() const {
        return shape == EnvelopeShape::square ? amplitude * duration_ns
                                              : 0.5 * amplitude * duration_ns;
    }
};

/// One pulse addressing transition n <-> n+1 (1-based n).
struct PulseSpec {
    int transition = 1;
    Envelope envelope;
};

struct TimedPulse {
    PulseSpec pulse;
    double start_ns = 0.0;

    double end_ns() const { return start_ns + pulse.envelope.duration_ns; }
};

/// Pulses ordered by start time; total_time_ns covers the full run,
/// including inter-pulse gaps and any trailing free evolution.
struct Schedule {
    std::vector<TimedPulse> pulses;
    double total_time_ns = 0.0;

    double min_pulse_duration() const {
        double m = infinite_lifetime;
        for (const auto& tp : pulses) m = std::min(m, tp.pulse.envelope.duration_ns);
        return m;
    }
};

inline Schedule make_contiguous_schedule(const std::vector<PulseSpec>& pulses,
                                         double gap_ns = 0.0) {
    if (gap_ns < 0.0 || !std::isfinite(gap_ns))
        throw std::invalid_argument("make_contiguous_schedule: gap must be finite and >= 0");
    Schedule sched;
    double t = 0.0;
    for (std::size_t i = 0; i < pulses.size(); ++i) {
        if (i > 0) t += gap_ns;
        sched.pulses.push_back({pulses[i], t});
        t += pulses[i].envelope.duration_ns;
    }
    sched.total_time_ns = t;
    return sched;
}

/// N-level ladder. Arrays are 0-based internally; levels are numbered
/// 1..N in the public accessors and in all error messages.
struct LadderSystem {
    std::vector<double> energies;         // E_n, rad/ns
    std::vector<double> osc_strengths;    // d_n for transition n <-> n+1, n = 1..N-1
    std::vector<double> lifetimes_ns;     // tau_n for n = 2..N; +inf marks a stable level
    std::vector<std::string> labels;      // optional, one per level

    int n_levels() const { return static_cast<int>(energies.size()); }

    // mu_n = E_{n+1} - E_n, n in 1..N-1
    double transition_freq(int n) const { return energies[n] - energies[n - 1]; }

    // tau of level n, n in 2..N
    double lifetime_of_level(int n) const { return lifetimes_ns[n - 2]; }

    // Gamma_n = 1/tau_n; zero for stable levels
    double decay_rate_of_level(int n) const {
        const double tau = lifetimes_ns[n - 2];
        return std::isinf(tau) ? 0.0 : 1.0 / tau;
    }
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

/// Checks structural invariants; returns one entry per violated rule
/// (empty means valid). Pure function of its argument.
inline std::vector<Violation> validate_system(const LadderSystem& sys) {
    std::vector<Violation> out;
    const int n = sys.n_levels();

    if (n < 2) out.push_back({"energies", "at least two levels are required"});
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(sys.energies[i]))
            out.push_back({"energies", "level " + std::to_string(i + 1) + " energy must be finite"});

    for (int k = 1; k <= n - 1; ++k)
        if (!(sys.transition_freq(k) > 0.0))
            out.push_back({"energies", "transition frequency mu_" + std::to_string(k) +
                                           " must be strictly positive"});
    for (int i = 1; i <= n - 1; ++i)
        for (int j = i + 1; j <= n - 1; ++j)
            if (sys.transition_freq(i) == sys.transition_freq(j))
                out.push_back({"energies", "transition frequencies mu_" + std::to_string(i) +
                                               " and mu_" + std::to_string(j) +
                                               " must be distinct"});

    if (static_cast<int>(sys.osc_strengths.size()) != std::max(n - 1, 0))
        out.push_back({"osc_strengths", "expected " + std::to_string(std::max(n - 1, 0)) +
                                            " entries, got " +
                                            std::to_string(sys.osc_strengths.size())});
    for (std::size_t k = 0; k < sys.osc_strengths.size(); ++k)
        if (!(sys.osc_strengths[k] > 0.0) || !std::isfinite(sys.osc_strengths[k]))
            out.push_back({"osc_strengths", "d_" + std::to_string(k + 1) +
                                                " must be positive and finite"});

    if (static_cast<int>(sys.lifetimes_ns.size()) != std::max(n - 1, 0))
        out.push_back({"lifetimes", "expected " + std::to_string(std::max(n - 1, 0)) +
                                        " entries (levels 2..N), got " +
                                        std::to_string(sys.lifetimes_ns.size())});
    for (std::size_t k = 0; k < sys.lifetimes_ns.size(); ++k) {
        const double tau = sys.lifetimes_ns[k];
        if (std::isnan(tau) || !(tau > 0.0))
            out.push_back({"lifetimes", "tau of level " + std::to_string(k + 2) +
                                            " must be positive (+inf marks a stable level)"});
    }

    if (!sys.labels.empty() && static_cast<int>(sys.labels.size()) != n)
        out.push_back({"labels", "expected one label per level"});

    return out;
}

/// Rubidium ladder 5S_1/2 -> 5P_3/2 -> 4D_5/2 -> 6P_3/2; the shipped default.
inline LadderSystem rb_four_level() {
    LadderSystem sys;
    sys.energies = {0.0, 1.0, 2.1, 3.3};
    sys.osc_strengths = {1.0, 1.0, 1.0};
    sys.lifetimes_ns = {26.2, 83.0, 112.0};
    sys.labels = {"5S_1/2", "5P_3/2", "4D_5/2", "6P_3/2"};
    return sys;
}

/// Density matrix with check-only state diagnostics; the matrix itself is
/// never renormalized or otherwise repaired.
struct DensityMatrix {
    CMatrix rho;

    DensityMatrix() = default;
    explicit DensityMatrix(CMatrix m) : rho(std::move(m)) {}

    int dim() const { return static_cast<int>(rho.rows()); }

    Eigen::VectorXd populations() const { return rho.diagonal().real(); }

    double trace_deviation() const { return std::abs(rho.trace() - std::complex<double>(1.0)); }

    double hermiticity_error() const {
        return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    }

    // smallest eigenvalue of the hermitized matrix; NaN if entries are not finite
    double min_eigenvalue() const {
        if (!rho.allFinite()) return std::numeric_limits<double>::quiet_NaN();
        const CMatrix h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    std::vector<Violation> violations(double trace_tol = 1e-7, double psd_tol = 1e-7,
                                      double herm_tol = 1e-9) const {
        std::vector<Violation> out;
        if (rho.rows() != rho.cols() || rho.rows() == 0)
            out.push_back({"rho", "matrix must be square and non-empty"});
        if (!rho.allFinite()) {
            out.push_back({"rho", "entries must be finite"});
            return out;
        }
        // negated comparisons so NaN results count as violations
        if (!(trace_deviation() <= trace_tol))
            out.push_back({"rho", "trace must equal 1 within tolerance"});
        if (!(hermiticity_error() <= herm_tol))
            out.push_back({"rho", "matrix must be Hermitian within tolerance"});
        if (!(min_eigenvalue() >= -psd_tol))
            out.push_back({"rho", "matrix must be positive semidefinite within tolerance"});
        return out;
    }
};

/// |1><1| on an N-level system.
inline DensityMatrix ground_state(int n_levels) {
    if (n_levels < 2)
        throw std::invalid_argument("ground_state: at least two levels are required");
    CMatrix m = CMatrix::Zero(n_levels, n_levels);
    m(0, 0) = 1.0;
    return DensityMatrix(std::move(m));
}

/// Splits total_time_ns proportionally to the given positive ratios.
inline std::vector<double> ratios_to_durations(double total_time_ns,
                                               const std::vector<double>& ratios) {
    if (!(total_time_ns > 0.0) || !std::isfinite(total_time_ns))
        throw std::invalid_argument("ratios_to_durations: total time must be positive and finite");
    if (ratios.empty())
        throw std::invalid_argument("ratios_to_durations: at least one ratio is required");
    for (double r : ratios)
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("ratios_to_durations: ratios must be positive and finite");
    const double sum = std::accumulate(ratios.begin(), ratios.end(), 0.0);
    std::vector<double> out(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) out[i] = total_time_ns * ratios[i] / sum;
    return out;
}

}
