#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "io.hpp"
#include "model.hpp"
#include "protocol.hpp"

namespace ladder {

/// Scales ratios to sum to 1. Entries must be positive and finite.
inline std::vector<double> canonical_ratios(const std::vector<double>& ratios) {
    if (ratios.empty()) throw std::invalid_argument("canonical_ratios: empty ratio set");
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("canonical_ratios: ratios must be positive and finite");
        sum += r;
    }
    std::vector<double> out(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) out[i] = ratios[i] / sum;
    return out;
}

/// "1:1:3"-style label, smallest entry scaled to 1, 6 significant digits.
inline std::string ratio_label(const std::vector<double>& ratios) {
    const auto canon = canonical_ratios(ratios);
    const double mn = *std::min_element(canon.begin(), canon.end());
    std::string out;
    for (std::size_t i = 0; i < canon.size(); ++i) {
        if (i) out += ':';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", canon[i] / mn);
        out += buf;
    }
    return out;
}

/// Durations proportional to the lifetimes of levels 2..N; empty if any of
/// them is infinite (the proportion is undefined then).
inline std::vector<double> lifetime_ratios(const LadderSystem& sys) {
    std::vector<double> out;
    for (double tau : sys.lifetimes_ns) {
        if (std::isinf(tau)) return {};
        out.push_back(tau);
    }
    return out;
}

inline std::vector<std::vector<double>> default_ratio_sets(const LadderSystem& sys) {
    const int k = sys.n_levels() - 1;
    std::vector<std::vector<double>> sets;
    sets.emplace_back(k, 1.0);
    if (auto lt = lifetime_ratios(sys); !lt.empty()) sets.push_back(std::move(lt));
    for (double tail : {2.0, 3.0, 4.0}) {
        std::vector<double> r(k, 1.0);
        r.back() = tail;
        sets.push_back(std::move(r));
    }
    return sets;
}

struct SweepGrid {
    std::vector<double> total_times_ns;
    std::vector<std::vector<double>> ratio_sets;
    EnvelopeShape shape = EnvelopeShape::square;
};

inline SweepGrid default_grid(const LadderSystem& sys) {
    SweepGrid g;
    for (int t = 5; t <= 50; t += 5) g.total_times_ns.push_back(t);
    g.ratio_sets = default_ratio_sets(sys);
    return g;
}

struct SweepRow {
    double total_time_ns = 0.0;
    std::vector<double> ratios;
    std::string ratio_label;
    bool ok = false;
    double yield = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> final_populations;
    std::string error;  // empty when ok
};

struct SweepProvenance {
    std::string config_hash;
    double step_divisor = 0.0;
};

/// Rows in series-major order: all total times of the first ratio set, then
/// the next set, and so on. Failed rows carry the error text; the rest of the
/// sweep still completes.
struct SweepResult {
    std::vector<SweepRow> rows;
    SweepProvenance provenance;
};

inline SweepResult run_sweep(const LadderSystem& sys, const SweepGrid& grid,
                             const StepPolicy& policy = {}, int threads = 0,
                             std::string config_hash = "") {
    const auto sysv = validate_system(sys);
    if (!sysv.empty())
        throw std::invalid_argument("run_sweep: invalid system: " + sysv.front().field + ": " +
                                    sysv.front().rule);
    if (grid.total_times_ns.empty() || grid.ratio_sets.empty())
        throw std::invalid_argument("run_sweep: grid must have total times and ratio sets");
    for (double t : grid.total_times_ns)
        if (!(t > 0.0) || !std::isfinite(t))
            throw std::invalid_argument("run_sweep: total times must be positive and finite");
    for (const auto& r : grid.ratio_sets)
        if (static_cast<int>(r.size()) != sys.n_levels() - 1)
            throw std::invalid_argument("run_sweep: each ratio set needs one entry per transition");

    SweepResult result;
    result.provenance.config_hash = std::move(config_hash);
    result.provenance.step_divisor = policy.step_divisor;

    const std::size_t n_rows = grid.ratio_sets.size() * grid.total_times_ns.size();
    result.rows.resize(n_rows);

    auto compute_row = [&](std::size_t idx) {
        const auto& ratios = grid.ratio_sets[idx / grid.total_times_ns.size()];
        const double tf = grid.total_times_ns[idx % grid.total_times_ns.size()];
        SweepRow& row = result.rows[idx];
        row.total_time_ns = tf;
        row.ratios = ratios;
        row.ratio_label = ratio_label(ratios);
        try {
            const auto durations = ratios_to_durations(tf, ratios);
            const auto sched = build_inversion_schedule(sys, durations, grid.shape);
            const auto traj = propagate_with_policy(ground_state(sys.n_levels()), sched, sys, policy);
            const auto& fin = traj.populations.back();
            row.final_populations.assign(fin.data(), fin.data() + fin.size());
            row.yield = row.final_populations.back() - row.final_populations.front();
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    };

    unsigned n_workers = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(n_rows));

    if (n_workers <= 1) {
        for (std::size_t i = 0; i < n_rows; ++i) compute_row(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n_rows; i = next.fetch_add(1))
                    compute_row(i);
            });
        for (auto& th : pool) th.join();
    }
    return result;
}

/// Columns: Tf_ns, ratio_label, yield (12 significant digits). Failed rows
/// are omitted; the data section depends only on the sweep inputs, never on
/// the thread count.
inline void export_sweep_csv(const SweepResult& result, const std::string& path) {
    if (result.rows.empty()) throw std::invalid_argument("export_sweep_csv: empty sweep result");
    auto os = detail::open_out(path);
    write_provenance_comment(os, result.provenance.config_hash);
    os << "Tf_ns,ratio_label,yield\n";
    for (const auto& row : result.rows) {
        if (!row.ok) continue;
        os << format_g12(row.total_time_ns) << ',' << row.ratio_label << ','
           << format_g12(row.yield) << '\n';
    }
    detail::finish_out(os, path);
}

struct OptimizeOptions {
    int max_iterations = 200;
    double diameter_tol = 1e-4;
    double min_ratio = 1e-3;  // probes with any canonical ratio below this score -1
    StepPolicy policy{};
    std::vector<std::vector<double>> seeds;  // empty: default_ratio_sets
};

struct OptimizeResult {
    std::vector<double> ratios;  // canonical, sums to 1
    double yield = -1.0;
    int evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead search over duration ratios at fixed total time, maximizing
/// the yield. Works on the (N-2)-dimensional simplex of canonical ratios;
/// infeasible or failing probes score -1 and the search continues. Returns
/// the best point ever evaluated, so the result is never worse than the
/// best seed.
inline OptimizeResult optimize_ratios(const LadderSystem& sys, double total_time_ns,
                                      EnvelopeShape shape, const OptimizeOptions& opt = {}) {
    const auto sysv = validate_system(sys);
    if (!sysv.empty())
        throw std::invalid_argument("optimize_ratios: invalid system: " + sysv.front().field +
                                    ": " + sysv.front().rule);
    if (!(total_time_ns > 0.0) || !std::isfinite(total_time_ns))
        throw std::invalid_argument("optimize_ratios: total time must be positive and finite");
    if (opt.max_iterations < 1 || !(opt.diameter_tol > 0.0) || !(opt.min_ratio > 0.0))
        throw std::invalid_argument("optimize_ratios: invalid options");

    const int n_ratios = sys.n_levels() - 1;
    const int dim = n_ratios - 1;

    OptimizeResult result;
    std::vector<double> best_x;  // full canonical ratio vector

    auto ratios_of = [&](const std::vector<double>& x) {
        std::vector<double> r(n_ratios);
        double sum = 0.0;
        for (int i = 0; i < dim; ++i) {
            r[i] = x[i];
            sum += x[i];
        }
        r[n_ratios - 1] = 1.0 - sum;
        return r;
    };

    // the simplex loop minimizes f = -yield
    auto evaluate = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const auto r = ratios_of(x);
        for (double ri : r)
            if (!(ri >= opt.min_ratio)) return 1.0;  // f = -(-1)
        double y = -1.0;
        try {
            const auto durations = ratios_to_durations(total_time_ns, r);
            const auto sched = build_inversion_schedule(sys, durations, shape);
            const auto traj =
                propagate_with_policy(ground_state(sys.n_levels()), sched, sys, opt.policy);
            y = traj.populations.back()[sys.n_levels() - 1] - traj.populations.back()[0];
        } catch (const std::exception&) {
            y = -1.0;
        }
        if (y > result.yield) {
            result.yield = y;
            best_x = r;
        }
        return -y;
    };

    const auto seed_sets = opt.seeds.empty() ? default_ratio_sets(sys) : opt.seeds;
    std::vector<double> x0;
    double f0 = std::numeric_limits<double>::infinity();
    for (const auto& seed : seed_sets) {
        if (static_cast<int>(seed.size()) != n_ratios)
            throw std::invalid_argument("optimize_ratios: seed ratio set has wrong length");
        const auto canon = canonical_ratios(seed);
        std::vector<double> x(canon.begin(), canon.begin() + dim);
        const double f = evaluate(x);
        if (f < f0) {
            f0 = f;
            x0 = x;
        }
    }

    if (dim == 0) {  // two-level system: nothing to optimize
        result.ratios = {1.0};
        result.converged = true;
        return result;
    }

    // initial simplex around the best seed
    std::vector<std::vector<double>> vx(dim + 1, x0);
    std::vector<double> vf(dim + 1);
    vf[0] = f0;
    const double delta = 0.08;
    for (int i = 0; i < dim; ++i) {
        auto& v = vx[i + 1];
        v[i] += delta;
        bool ok = true;
        for (double ri : ratios_of(v))
            if (!(ri >= opt.min_ratio)) ok = false;
        if (!ok) v[i] -= 2.0 * delta;
        vf[i + 1] = evaluate(v);
    }

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    auto order = [&] {
        std::vector<int> idx(dim + 1);
        for (int i = 0; i <= dim; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vf[a] < vf[b]; });
        std::vector<std::vector<double>> nx(dim + 1);
        std::vector<double> nf(dim + 1);
        for (int i = 0; i <= dim; ++i) {
            nx[i] = vx[idx[i]];
            nf[i] = vf[idx[i]];
        }
        vx = std::move(nx);
        vf = std::move(nf);
    };

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        order();

        double diameter = 0.0;
        for (int i = 1; i <= dim; ++i)
            for (int k = 0; k < dim; ++k)
                diameter = std::max(diameter, std::abs(vx[i][k] - vx[0][k]));
        if (diameter < opt.diameter_tol) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < dim; ++k) centroid[k] += vx[i][k] / dim;

        auto blend = [&](const std::vector<double>& from, double coeff) {
            std::vector<double> p(dim);
            for (int k = 0; k < dim; ++k) p[k] = centroid[k] + coeff * (centroid[k] - from[k]);
            return p;
        };

        const auto xr = blend(vx[dim], alpha);
        const double fr = evaluate(xr);
        if (fr < vf[0]) {
            const auto xe = blend(vx[dim], gamma);
            const double fe = evaluate(xe);
            if (fe < fr) {
                vx[dim] = xe;
                vf[dim] = fe;
            } else {
                vx[dim] = xr;
                vf[dim] = fr;
            }
        } else if (fr < vf[dim - 1]) {
            vx[dim] = xr;
            vf[dim] = fr;
        } else {
            // contract towards xr when it at least beat the worst vertex,
            // otherwise towards the worst vertex itself
            const bool outside = fr < vf[dim];
            std::vector<double> xc(dim);
            for (int k = 0; k < dim; ++k)
                xc[k] = outside ? centroid[k] + rho * (xr[k] - centroid[k])
                                : centroid[k] + rho * (vx[dim][k] - centroid[k]);
            const double fc = evaluate(xc);
            if (fc <= (outside ? fr : vf[dim])) {
                vx[dim] = xc;
                vf[dim] = fc;
            } else {
                for (int i = 1; i <= dim; ++i) {
                    for (int k = 0; k < dim; ++k)
                        vx[i][k] = vx[0][k] + sigma * (vx[i][k] - vx[0][k]);
                    vf[i] = evaluate(vx[i]);
                }
            }
        }
    }

    result.ratios = best_x.empty() ? canonical_ratios(seed_sets.front()) : best_x;
    return result;
}

}
