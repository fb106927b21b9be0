#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ladder {

struct RabiPopulations {
    double lower = 0.0;
    double upper = 0.0;
};

/// Resonant two-level RWA rotation by theta = d * integral of f(t) dt:
/// p_lower = cos^2(theta), p_upper = sin^2(theta).
inline RabiPopulations rabi_populations(double theta) {
    if (!std::isfinite(theta))
        throw std::invalid_argument("rabi_populations: theta must be finite");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * c, s * s};
}

namespace detail {

// Divided differences of f(x) = exp(-x*t) over possibly repeated nodes.
// Nodes closer than 1e-12 take the confluent (Hermite) limit
// f[x,...,x] (j+1 nodes) = (-t)^j exp(-x t) / j!.
inline double expm_divided_difference(std::vector<double> nodes, double t) {
    std::sort(nodes.begin(), nodes.end());
    const std::size_t m = nodes.size();
    std::vector<double> prev(m), col(m);
    for (std::size_t i = 0; i < m; ++i) prev[i] = std::exp(-nodes[i] * t);
    double fact = 1.0;
    double power = 1.0;  // (-t)^j
    for (std::size_t j = 1; j < m; ++j) {
        fact *= static_cast<double>(j);
        power *= -t;
        for (std::size_t i = 0; i + j < m; ++i) {
            const double dx = nodes[i + j] - nodes[i];
            if (std::abs(dx) < 1e-12)
                col[i] = power / fact * std::exp(-nodes[i] * t);
            else
                col[i] = (prev[i + 1] - prev[i]) / dx;
        }
        std::swap(col, prev);
    }
    return prev[0];
}

}  // namespace detail

/// Populations of a pure decay cascade (no drive) that starts fully in
/// `start_level` at t = 0. `rates` holds Gamma_n for levels 2..N, so the
/// returned vector has rates.size()+1 entries (levels 1..N). Degenerate
/// rates are handled by the confluent limit of the Bateman solution.
inline std::vector<double> cascade_populations(const std::vector<double>& rates, double t_ns,
                                               int start_level) {
    const int n = static_cast<int>(rates.size()) + 1;
    if (rates.empty())
        throw std::invalid_argument("cascade_populations: need one rate per level 2..N");
    if (start_level < 1 || start_level > n)
        throw std::invalid_argument("cascade_populations: start level out of range");
    if (!(t_ns >= 0.0) || !std::isfinite(t_ns))
        throw std::invalid_argument("cascade_populations: time must be finite and >= 0");
    for (double g : rates)
        if (!(g >= 0.0) || !std::isfinite(g))
            throw std::invalid_argument("cascade_populations: rates must be finite and >= 0");

    auto rate_of = [&](int level) { return level == 1 ? 0.0 : rates[level - 2]; };

    std::vector<double> p(n, 0.0);
    const int s = start_level;
    for (int level = s; level >= 1; --level) {
        std::vector<double> nodes;
        nodes.reserve(s - level + 1);
        for (int k = s; k >= level; --k) nodes.push_back(rate_of(k));
        double prefactor = 1.0;
        for (int k = level + 1; k <= s; ++k) prefactor *= rate_of(k);
        const std::size_t m = nodes.size();
        const double sign = (m % 2 == 1) ? 1.0 : -1.0;  // (-1)^(m-1)
        p[level - 1] = prefactor * sign * detail::expm_divided_difference(std::move(nodes), t_ns);
    }
    return p;
}

}
