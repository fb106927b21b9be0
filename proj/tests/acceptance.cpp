// Acceptance harness: one line per criterion, exit 1 on any failure.
// Tolerances are pinned here, not configurable.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <ladder/ladder.hpp>

using namespace ladder;

namespace {

struct Harness {
    bool all_ok = true;

    void result(int id, const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << " " << name << ": "
                  << detail << "\n";
        all_ok &= ok;
    }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double frob(const CMatrix& a, const CMatrix& b) { return (a - b).norm(); }

// every trajectory produced below lands here for the CPTP criterion;
// a deque keeps earlier references valid while more runs are appended
std::deque<Trajectory> g_store;

const Trajectory& keep(Trajectory traj) {
    g_store.push_back(std::move(traj));
    return g_store.back();
}

LadderSystem ideal_rb() {
    auto sys = rb_four_level();
    sys.lifetimes_ns.assign(3, infinite_lifetime);
    return sys;
}

struct CliRun {
    int exit_code = -1;
    std::string output;
};

CliRun run_cli(const std::string& args) {
    static int counter = 0;
    const std::string capture = "acc_capture_" + std::to_string(counter++) + ".txt";
    const int status =
        std::system((std::string(LADDER_CLI_PATH) + " " + args + " > " + capture + " 2>&1").c_str());
    CliRun r;
    if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    std::ifstream in(capture);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    std::remove(capture.c_str());
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    Harness h;

    // ---- criterion 1: ideal complete transfer, any durations in [1, 30] ns
    {
        const auto sys = ideal_rb();
        const std::vector<std::vector<double>> splits{
            {6.0, 6.0, 18.0}, {10.0, 10.0, 10.0}, {1.0, 8.0, 30.0}, {2.0, 2.0, 26.0}};
        bool ok = true;
        double worst_p44 = 1.0, worst_ms = 0.0;
        for (const auto shape : {EnvelopeShape::square, EnvelopeShape::raised_cosine}) {
            for (const auto& durations : splits) {
                const auto t0 = std::chrono::steady_clock::now();
                const auto& traj = keep(propagate_with_policy(
                    ground_state(4), build_inversion_schedule(sys, durations, shape), sys));
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              t0)
                        .count();
                const double p44 = traj.populations.back()[3];
                worst_p44 = std::min(worst_p44, p44);
                worst_ms = std::max(worst_ms, ms);
                if (!(p44 >= 1.0 - 1e-6) || ms >= 1000.0) ok = false;
            }
        }
        h.result(1, "ideal_transfer", ok,
                 "min rho44 = " + num(worst_p44) + " over 8 runs, slowest " + num(worst_ms) +
                     " ms");
    }

    // ---- criterion 2: final state independent of shape and duration split
    {
        const auto sys = ideal_rb();
        std::vector<CMatrix> finals;
        for (const auto shape : {EnvelopeShape::square, EnvelopeShape::raised_cosine})
            for (const auto& durations :
                 {std::vector<double>{6.0, 6.0, 18.0}, std::vector<double>{10.0, 10.0, 10.0}}) {
                const auto& traj = keep(propagate_with_policy(
                    ground_state(4), build_inversion_schedule(sys, durations, shape), sys));
                finals.push_back(traj.final_state());
            }
        double worst = 0.0;
        for (std::size_t i = 0; i < finals.size(); ++i)
            for (std::size_t k = i + 1; k < finals.size(); ++k)
                worst = std::max(worst, frob(finals[i], finals[k]));
        h.result(2, "shape_length_invariance", worst < 1e-6,
                 "max pairwise Frobenius distance = " + num(worst));
    }

    // ---- criterion 4: closed-form and expm oracles (runs feed criterion 3)
    {
        bool ok = true;
        std::string detail;

        const auto sys = rb_four_level();
        const auto sched =
            build_inversion_schedule(sys, {6.0, 6.0, 18.0}, EnvelopeShape::square);
        const auto& rk4 = keep(propagate_with_policy(ground_state(4), sched, sys));
        const auto& exact = keep(propagate_expm(ground_state(4), sched, sys, 1.0));
        const double d_expm = frob(rk4.final_state(), exact.final_state());
        if (!(d_expm < 1e-6)) ok = false;
        detail += "rk4 vs expm = " + num(d_expm);

        LadderSystem two;
        two.energies = {0.0, 1.0};
        two.osc_strengths = {1.0};
        two.lifetimes_ns = {infinite_lifetime};
        double d_rabi = 0.0;
        for (const auto shape : {EnvelopeShape::square, EnvelopeShape::raised_cosine})
            for (const double theta : {0.4, M_PI / 4.0, 1.2, M_PI / 2.0}) {
                const double dt = 10.0;
                PulseSpec pulse;
                pulse.transition = 1;
                pulse.envelope = {shape, dt,
                                  shape == EnvelopeShape::square ? theta / dt : 2.0 * theta / dt};
                const auto& traj = keep(propagate(ground_state(2),
                                                  make_contiguous_schedule({pulse}), two,
                                                  dt / 2000.0, dt / 499.0));
                const auto expect = rabi_populations(theta);
                d_rabi = std::max(d_rabi,
                                  std::abs(traj.populations.back()[0] - expect.lower));
                d_rabi = std::max(d_rabi,
                                  std::abs(traj.populations.back()[1] - expect.upper));
            }
        if (!(d_rabi < 1e-8)) ok = false;
        detail += ", rabi = " + num(d_rabi);

        CMatrix top = CMatrix::Zero(4, 4);
        top(3, 3) = 1.0;
        Schedule free_sched;
        free_sched.total_time_ns = 50.0;
        const auto& decay =
            keep(propagate(DensityMatrix(top), free_sched, sys, 0.025, 0.1));
        double d_cascade = 0.0;
        for (const std::size_t idx : {decay.size() / 2, decay.size() - 1}) {
            const auto expect = cascade_populations({1.0 / 26.2, 1.0 / 83.0, 1.0 / 112.0},
                                                    decay.times_ns[idx], 4);
            for (int k = 0; k < 4; ++k)
                d_cascade =
                    std::max(d_cascade, std::abs(decay.populations[idx][k] - expect[k]));
        }
        if (!(d_cascade < 1e-8)) ok = false;
        detail += ", cascade = " + num(d_cascade);

        h.result(4, "oracle_equivalence", ok, detail);
    }

    // ---- criteria 5 + 6 + 8: ratio orderings, monotonicity, anchor band
    {
        const auto sys = rb_four_level();
        const std::vector<double> uniform{1.0, 1.0, 1.0};
        const std::vector<double> lifetime{26.2, 83.0, 112.0};
        const std::vector<double> tail2{1.0, 1.0, 2.0};
        const std::vector<double> tail3{1.0, 1.0, 3.0};
        const std::vector<double> tail4{1.0, 1.0, 4.0};

        SweepGrid grid;
        grid.total_times_ns = {10.0, 20.0, 30.0, 40.0, 50.0};
        grid.ratio_sets = {uniform, lifetime, tail2, tail3, tail4};

        const auto t0 = std::chrono::steady_clock::now();
        const auto sweep = run_sweep(sys, grid);
        const double sweep_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        // yields[set][time]
        const std::size_t nt = grid.total_times_ns.size();
        auto yield_of = [&](std::size_t set, std::size_t t) -> const SweepRow& {
            return sweep.rows[set * nt + t];
        };
        bool rows_ok = true;
        for (const auto& row : sweep.rows) rows_ok &= row.ok;

        bool uniform_worst = true, lifetime_marginal = true, tail_considerable = true;
        double worst_margin = 0.0;
        for (std::size_t t = 0; t < nt && rows_ok; ++t) {
            const double y_uniform = yield_of(0, t).yield;
            const double y_lifetime = yield_of(1, t).yield;
            const double y_tail3 = yield_of(3, t).yield;
            for (std::size_t s = 1; s < grid.ratio_sets.size(); ++s)
                if (!(yield_of(s, t).yield > y_uniform)) uniform_worst = false;
            const double margin = y_lifetime - y_uniform;
            worst_margin = std::max(worst_margin, margin);
            if (!(margin > 0.0 && margin < 0.05)) lifetime_marginal = false;
            if (!(y_tail3 - y_uniform > margin)) tail_considerable = false;
        }
        h.result(5, "ratio_ordering",
                 rows_ok && uniform_worst && lifetime_marginal && tail_considerable &&
                     sweep_s < 30.0,
                 "uniform worst at all Tf, lifetime margin max " + num(worst_margin) +
                     " < 0.05, 1:1:3 gain larger; sweep took " + num(sweep_s) + " s");

        bool monotone = true;
        double worst_rise = 0.0;
        for (std::size_t s = 0; s < grid.ratio_sets.size() && rows_ok; ++s)
            for (std::size_t t = 1; t < nt; ++t) {
                const double rise = yield_of(s, t).yield - yield_of(s, t - 1).yield;
                worst_rise = std::max(worst_rise, rise);
                if (rise > 0.0) monotone = false;
            }
        h.result(6, "yield_monotonicity", rows_ok && monotone,
                 "max yield increase along Tf = " + num(worst_rise));

        SweepGrid anchor;
        for (int t = 5; t <= 15; ++t) anchor.total_times_ns.push_back(t);
        anchor.ratio_sets = grid.ratio_sets;
        const auto anchor_sweep = run_sweep(sys, anchor);
        bool anchor_ok = true;
        double best = -1.0;
        for (const auto& row : anchor_sweep.rows) {
            anchor_ok &= row.ok;
            if (row.ok) best = std::max(best, row.yield);
        }
        anchor_ok = anchor_ok && best >= 0.80 && best <= 0.99;
        h.result(8, "yield_anchor", anchor_ok,
                 "best yield over Tf in [5, 15] = " + num(best) + ", band [0.80, 0.99]");
    }

    // ---- criterion 7: occupancy heuristic at the 6/6/18 split
    {
        const auto sys = ideal_rb();
        const auto& traj = keep(propagate_with_policy(
            ground_state(4),
            build_inversion_schedule(sys, {6.0, 6.0, 18.0}, EnvelopeShape::square), sys));
        const double occ2 = occupancy(traj, 2);
        const double occ3 = occupancy(traj, 3);
        const bool ok = std::abs(occ2 - 6.0) <= 0.3 && std::abs(occ3 - 12.0) <= 0.6;
        h.result(7, "occupancy_heuristic", ok,
                 "occupancy(2) = " + num(occ2) + " ns (6 +- 5%), occupancy(3) = " + num(occ3) +
                     " ns (12 +- 5%)");
    }

    // ---- criterion 9: dissipative run inverts, but below the ideal
    {
        const auto sched = build_inversion_schedule(rb_four_level(), {6.0, 6.0, 18.0},
                                                    EnvelopeShape::square);
        const auto& lossy =
            keep(propagate_with_policy(ground_state(4), sched, rb_four_level()));
        const auto& ideal = keep(propagate_with_policy(ground_state(4), sched, ideal_rb()));
        const double y = yield_metric(DensityMatrix(lossy.final_state()));
        const double yi = yield_metric(DensityMatrix(ideal.final_state()));
        h.result(9, "dissipative_cost", y > 0.0 && y < yi,
                 "yield = " + num(y) + ", ideal = " + num(yi));
    }

    // ---- criterion 3: CPTP invariants across every sampled state above
    {
        double max_trace = 0.0, min_eig = 0.0, max_herm = 0.0;
        std::size_t n_states = 0;
        for (const auto& traj : g_store)
            for (const auto& state : traj.states) {
                const DensityMatrix dm(state);
                max_trace = std::max(max_trace, dm.trace_deviation());
                min_eig = std::min(min_eig, dm.min_eigenvalue());
                max_herm = std::max(max_herm, dm.hermiticity_error());
                ++n_states;
            }
        const bool ok = max_trace < 1e-7 && min_eig >= -1e-7 && max_herm < 1e-9;
        h.result(3, "cptp_invariants", ok,
                 num(static_cast<double>(n_states)) + " states: max |tr-1| = " + num(max_trace) +
                     ", min eig = " + num(min_eig) + ", max herm = " + num(max_herm));
    }

    // ---- criterion 10: sweep output is byte-identical across thread counts
    {
        const std::string cfg_path = "acc_sweep_cfg.json";
        std::ofstream(cfg_path) << R"({
            "system": {
                "levels": [{"energy": 0.0}, {"energy": 1.0}, {"energy": 2.1}, {"energy": 3.3}],
                "transitions": [{"d": 1.0}, {"d": 1.0}, {"d": 1.0}],
                "lifetimes": [26.2, 83.0, 112.0]
            },
            "pulses": {"shape": "square", "ratios": [1, 1, 3], "total_time": 30.0},
            "sweep": {"total_times": [10, 20, 30], "ratio_sets": [[1, 1, 1], [1, 1, 3]]},
            "numerics": {"step_divisor": 400, "sample_count": 80}
        })";
        const auto r1 = run_cli("sweep --config " + cfg_path + " --threads 1 --out acc_out_t1");
        const auto r8 = run_cli("sweep --config " + cfg_path + " --threads 8 --out acc_out_t8");
        const auto csv1 = slurp("acc_out_t1/sweep.csv");
        const auto csv8 = slurp("acc_out_t8/sweep.csv");
        const bool ok =
            r1.exit_code == 0 && r8.exit_code == 0 && !csv1.empty() && csv1 == csv8;
        h.result(10, "sweep_determinism", ok,
                 "threads 1 vs 8: " + std::to_string(csv1.size()) + " bytes, " +
                     (csv1 == csv8 ? "identical" : "DIFFER"));
        std::remove(cfg_path.c_str());
    }

    std::cout << (h.all_ok ? "acceptance: PASS" : "acceptance: FAIL") << "\n";
    return h.all_ok ? 0 : 1;
}
