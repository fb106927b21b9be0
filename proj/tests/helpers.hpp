#pragma once

#include <complex>
#include <functional>
#include <random>

#include <ladder/ladder.hpp>

namespace test_util {

using ladder::CMatrix;

inline double frob(const CMatrix& a, const CMatrix& b) { return (a - b).norm(); }

inline CMatrix random_matrix(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    CMatrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = std::complex<double>(dist(gen), dist(gen));
    return g;
}

inline CMatrix random_hermitian(int n, unsigned seed) {
    const CMatrix g = random_matrix(n, seed);
    return 0.5 * (g + g.adjoint());
}

// Ginibre construction: always a valid density matrix
inline CMatrix random_density(int n, unsigned seed) {
    const CMatrix g = random_matrix(n, seed);
    CMatrix rho = g * g.adjoint();
    rho /= rho.trace();
    return rho;
}

inline ladder::LadderSystem two_level() {
    ladder::LadderSystem sys;
    sys.energies = {0.0, 1.0};
    sys.osc_strengths = {1.0};
    sys.lifetimes_ns = {ladder::infinite_lifetime};
    return sys;
}

inline ladder::DensityMatrix top_state(int n) {
    CMatrix m = CMatrix::Zero(n, n);
    m(n - 1, n - 1) = 1.0;
    return ladder::DensityMatrix(std::move(m));
}

// composite Simpson rule, n must be even
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace test_util
