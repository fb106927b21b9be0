// Command-line front end: simulate | sweep | optimize | validate.
// Exit codes: 0 success, 1 validation/check failure, 2 config error,
// 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <ladder/ladder.hpp>

namespace {

using namespace ladder;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    bool ideal_compare = false;
    bool no_decay = false;
    double step_divisor = 0.0;  // 0: keep config value
    int threads = -1;           // -1: keep config value
    double total_time = 0.0;    // 0: keep config value (optimize only)
};

std::string vec_str(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v[i]);
        out += buf;
    }
    return out + "]";
}

std::string num6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

RunConfig load_config(const CliOptions& o) {
    RunConfig cfg = o.config_path.empty() ? default_run_config()
                                          : parse_run_config_file(o.config_path);
    if (o.no_decay)
        for (auto& tau : cfg.system.lifetimes_ns) tau = infinite_lifetime;
    if (o.step_divisor != 0.0) {
        if (!(o.step_divisor > 0.0)) throw ConfigError("--step-divisor must be positive");
        cfg.numerics.step_divisor = o.step_divisor;
    }
    if (o.threads >= 0) cfg.numerics.threads = o.threads;
    return cfg;
}

std::filesystem::path resolve_out_dir(const RunConfig& cfg, const CliOptions& o) {
    std::string dir = cfg.output.directory;
    if (const char* env = std::getenv("LADDER_OUT_DIR"); env && *env) dir = env;
    if (!o.out_dir.empty()) dir = o.out_dir;
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p))
        throw ConfigError("cannot create output directory '" + dir + "'" +
                          (ec ? ": " + ec.message() : ""));
    return p;
}

std::vector<double> resolved_durations(const RunConfig& cfg) {
    return cfg.pulses.durations_ns.empty()
               ? ratios_to_durations(cfg.pulses.total_time_ns, cfg.pulses.ratios)
               : cfg.pulses.durations_ns;
}

StepPolicy policy_of(const RunConfig& cfg) {
    return {cfg.numerics.step_divisor, cfg.numerics.sample_count};
}

LadderSystem without_decay(LadderSystem sys) {
    for (auto& tau : sys.lifetimes_ns) tau = infinite_lifetime;
    return sys;
}

int cmd_simulate(const RunConfig& cfg, const CliOptions& o) {
    const auto hash = config_hash(cfg);
    const auto dir = resolve_out_dir(cfg, o);
    const auto durations = resolved_durations(cfg);
    const auto sched =
        build_inversion_schedule(cfg.system, durations, cfg.pulses.shape, cfg.pulses.gap_ns);
    const auto policy = policy_of(cfg);

    const auto traj = propagate_with_policy(ground_state(cfg.system.n_levels()), sched,
                                            cfg.system, policy);
    const auto rep = make_yield_report(traj);

    write_trajectory_csv((dir / "trajectory.csv").string(), traj, hash);
    write_pulse_csv((dir / "pulses.csv").string(), sched, policy.sample_count, hash);
    write_yield_json((dir / "yield.json").string(), rep, hash);
    if (cfg.output.write_states) write_states_json((dir / "states.json").string(), traj, hash);

    std::cout << "system: " << cfg.system.n_levels() << " levels, " << sched.pulses.size()
              << " " << shape_name(cfg.pulses.shape) << " pulses, total "
              << num6(sched.total_time_ns) << " ns\n";
    std::cout << "durations_ns = " << vec_str(durations) << "\n";
    if (durations.size() == 3)
        std::cout << "upper-heavy split (dt2+dt3 > 3(dt1+dt2)): "
                  << (check_ratio_heuristic(durations) ? "yes" : "no") << "\n";
    std::cout << "yield = " << num6(rep.yield)
              << ", final populations = " << vec_str(rep.populations) << "\n";
    std::cout << "occupancy_ns = " << vec_str(rep.occupancy_ns) << "\n";

    if (o.ideal_compare) {
        const auto ideal_sys = without_decay(cfg.system);
        const auto ideal_traj =
            propagate_with_policy(ground_state(cfg.system.n_levels()), sched, ideal_sys, policy);
        const auto ideal_rep = make_yield_report(ideal_traj);
        write_trajectory_csv((dir / "trajectory_ideal.csv").string(), ideal_traj, hash);
        write_yield_json((dir / "yield_ideal.json").string(), ideal_rep, hash);
        std::cout << "ideal (no decay) yield = " << num6(ideal_rep.yield)
                  << ", decay cost = " << num6(ideal_rep.yield - rep.yield) << "\n";
    }

    std::cout << "wrote " << (dir / "trajectory.csv").string() << ", pulses.csv, yield.json"
              << (cfg.output.write_states ? ", states.json" : "")
              << (o.ideal_compare ? ", trajectory_ideal.csv, yield_ideal.json" : "") << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const CliOptions& o) {
    const auto hash = config_hash(cfg);
    const auto dir = resolve_out_dir(cfg, o);

    SweepGrid grid = default_grid(cfg.system);
    grid.shape = cfg.pulses.shape;
    if (cfg.sweep) {
        if (!cfg.sweep->total_times_ns.empty()) grid.total_times_ns = cfg.sweep->total_times_ns;
        if (!cfg.sweep->ratio_sets.empty()) grid.ratio_sets = cfg.sweep->ratio_sets;
    }

    const auto result =
        run_sweep(cfg.system, grid, policy_of(cfg), cfg.numerics.threads, hash);
    export_sweep_csv(result, (dir / "sweep.csv").string());

    std::size_t failed = 0;
    const SweepRow* best = nullptr;
    for (const auto& row : result.rows) {
        if (!row.ok) {
            ++failed;
            continue;
        }
        if (!best || row.yield > best->yield) best = &row;
    }
    std::cout << "sweep: " << grid.ratio_sets.size() << " ratio sets x "
              << grid.total_times_ns.size() << " total times = " << result.rows.size()
              << " rows, " << failed << " failed\n";
    if (best)
        std::cout << "best: ratio " << best->ratio_label << " at Tf = "
                  << num6(best->total_time_ns) << " ns, yield = " << num6(best->yield) << "\n";
    for (const auto& row : result.rows)
        if (!row.ok)
            std::cout << "failed: Tf = " << num6(row.total_time_ns) << " ns, ratio "
                      << row.ratio_label << ": " << row.error << "\n";
    std::cout << "wrote " << (dir / "sweep.csv").string() << "\n";
    return failed == 0 ? 0 : 1;
}

int cmd_optimize(const RunConfig& cfg, const CliOptions& o) {
    const auto hash = config_hash(cfg);
    const auto dir = resolve_out_dir(cfg, o);
    const double tf = o.total_time > 0.0 ? o.total_time : cfg.pulses.total_time_ns;
    if (!(tf > 0.0)) throw ConfigError("optimize needs a positive total time");

    OptimizeOptions opts;
    opts.policy = policy_of(cfg);
    const auto result = optimize_ratios(cfg.system, tf, cfg.pulses.shape, opts);

    nlohmann::json j{{"total_time_ns", tf},
                     {"shape", shape_name(cfg.pulses.shape)},
                     {"best_ratios", result.ratios},
                     {"best_label", ratio_label(result.ratios)},
                     {"yield", result.yield},
                     {"evaluations", result.evaluations},
                     {"converged", result.converged},
                     {"config_hash", hash},
                     {"version", version_string}};
    const auto path = (dir / "optimize.json").string();
    auto os = std::ofstream(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
    os.flush();
    if (!os) throw IoError("write to '" + path + "' failed");

    std::cout << "optimize: Tf = " << num6(tf) << " ns, " << shape_name(cfg.pulses.shape)
              << " pulses\n";
    std::cout << "best ratios = " << vec_str(result.ratios) << " (label "
              << ratio_label(result.ratios) << ")\n";
    std::cout << "yield = " << num6(result.yield) << " after " << result.evaluations
              << " evaluations" << (result.converged ? " (converged)" : " (iteration cap)")
              << "\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

struct CheckOutcome {
    bool failed = false;
    void report(const std::string& name, const std::function<std::string()>& check) {
        try {
            const std::string detail = check();
            if (detail.rfind("SKIP:", 0) == 0)
                std::cout << "[SKIP] " << name << ": " << detail.substr(5) << "\n";
            else
                std::cout << "[PASS] " << name << (detail.empty() ? "" : ": " + detail) << "\n";
        } catch (const std::exception& e) {
            failed = true;
            std::cout << "[FAIL] " << name << ": " << e.what() << "\n";
        }
    }
};

[[noreturn]] void check_fail(const std::string& msg) { throw std::runtime_error(msg); }

double frobenius(const CMatrix& a, const CMatrix& b) { return (a - b).norm(); }

int cmd_validate(const RunConfig& cfg, const CliOptions&) {
    const auto policy = policy_of(cfg);
    const auto durations = resolved_durations(cfg);
    const int n = cfg.system.n_levels();
    CheckOutcome out;

    out.report("rabi_oracle", [&] {
        LadderSystem two;
        two.energies = {0.0, 1.0};
        two.osc_strengths = {1.0};
        two.lifetimes_ns = {infinite_lifetime};
        double worst = 0.0;
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
            const double theta = frac * M_PI / 2.0;
            PulseSpec pulse;
            pulse.transition = 1;
            pulse.envelope = {EnvelopeShape::square, 10.0, theta / 10.0};
            const auto sched = make_contiguous_schedule({pulse});
            const auto traj = propagate(ground_state(2), sched, two, 10.0 / policy.step_divisor,
                                        policy_sample_interval(sched, policy));
            const auto expect = rabi_populations(theta);
            worst = std::max(worst, std::abs(traj.populations.back()[0] - expect.lower));
            worst = std::max(worst, std::abs(traj.populations.back()[1] - expect.upper));
        }
        if (!(worst < 1e-8)) check_fail("max population error " + num6(worst) + " >= 1e-8");
        return "max population error " + num6(worst);
    });

    out.report("cascade_oracle", [&] {
        std::vector<double> rates;
        for (int lvl = 2; lvl <= n; ++lvl) rates.push_back(cfg.system.decay_rate_of_level(lvl));
        CMatrix top = CMatrix::Zero(n, n);
        top(n - 1, n - 1) = 1.0;
        Schedule free;
        free.total_time_ns = 50.0;
        const auto traj = propagate(DensityMatrix(top), free, cfg.system,
                                    50.0 / policy.step_divisor, 50.0 / (policy.sample_count - 1));
        const auto expect = cascade_populations(rates, 50.0, n);
        double worst = 0.0;
        for (int k = 0; k < n; ++k)
            worst = std::max(worst, std::abs(traj.populations.back()[k] - expect[k]));
        if (!(worst < 1e-8)) check_fail("max population error " + num6(worst) + " >= 1e-8");
        return "max population error " + num6(worst);
    });

    out.report("expm_cross_check", [&] {
        const auto sched =
            build_inversion_schedule(cfg.system, durations, EnvelopeShape::square);
        const auto rk4 = propagate_with_policy(ground_state(n), sched, cfg.system, policy);
        const auto exact = propagate_expm(ground_state(n), sched, cfg.system);
        const double diff = frobenius(rk4.final_state(), exact.final_state());
        if (!(diff < 1e-6)) check_fail("final-state difference " + num6(diff) + " >= 1e-6");
        return "final-state difference " + num6(diff);
    });

    out.report("step_convergence", [&] {
        const auto sched =
            build_inversion_schedule(cfg.system, durations, cfg.pulses.shape, cfg.pulses.gap_ns);
        const auto coarse = propagate_with_policy(ground_state(n), sched, cfg.system, policy);
        StepPolicy fine = policy;
        fine.step_divisor *= 2.0;
        const auto refined = propagate_with_policy(ground_state(n), sched, cfg.system, fine);
        const double diff = frobenius(coarse.final_state(), refined.final_state());
        if (!(diff < 1e-8)) check_fail("halving the step moved the final state by " +
                                       num6(diff) + " >= 1e-8");
        return "step halving moves final state by " + num6(diff);
    });

    out.report("rk4_order", [&] {
        const auto sched =
            build_inversion_schedule(cfg.system, durations, cfg.pulses.shape, cfg.pulses.gap_ns);
        auto run = [&](double divisor) {
            return propagate_with_policy(ground_state(n), sched, cfg.system,
                                         {divisor, policy.sample_count});
        };
        const auto ref = run(3200.0);
        const double e1 = frobenius(run(100.0).final_state(), ref.final_state());
        const double e2 = frobenius(run(200.0).final_state(), ref.final_state());
        const double ratio = e1 / e2;
        if (!(ratio > 8.0 && ratio < 32.0))
            check_fail("error ratio " + num6(ratio) + " outside (8, 32)");
        return "error ratio " + num6(ratio) + " (expected about 16)";
    });

    out.report("shape_invariance", [&] {
        const auto ideal = without_decay(cfg.system);
        const auto sq = propagate_with_policy(
            ground_state(n), build_inversion_schedule(ideal, durations, EnvelopeShape::square),
            ideal, policy);
        const auto rc = propagate_with_policy(
            ground_state(n),
            build_inversion_schedule(ideal, durations, EnvelopeShape::raised_cosine), ideal,
            policy);
        const double diff = frobenius(sq.final_state(), rc.final_state());
        if (!(diff < 1e-6)) check_fail("final-state difference " + num6(diff) + " >= 1e-6");
        return "final-state difference " + num6(diff);
    });

    out.report("d_rescale_invariance", [&] {
        LadderSystem scaled = cfg.system;
        for (auto& d : scaled.osc_strengths) d *= 2.3;
        const auto base = propagate_with_policy(
            ground_state(n),
            build_inversion_schedule(cfg.system, durations, cfg.pulses.shape), cfg.system,
            policy);
        const auto resc = propagate_with_policy(
            ground_state(n), build_inversion_schedule(scaled, durations, cfg.pulses.shape),
            scaled, policy);
        const double diff = frobenius(base.final_state(), resc.final_state());
        if (!(diff < 1e-8)) check_fail("final-state difference " + num6(diff) + " >= 1e-8");
        return "final-state difference " + num6(diff);
    });

    out.report("ideal_transfer", [&] {
        const auto ideal = without_decay(cfg.system);
        double worst = 1.0;
        for (auto shape : {EnvelopeShape::square, EnvelopeShape::raised_cosine}) {
            const auto traj = propagate_with_policy(
                ground_state(n), build_inversion_schedule(ideal, durations, shape), ideal,
                policy);
            worst = std::min(worst, traj.populations.back()[n - 1]);
        }
        if (!(worst >= 1.0 - 1e-6))
            check_fail("top-level population " + num6(worst) + " < 1 - 1e-6");
        return "top-level population " + num6(worst);
    });

    out.report("dissipative_ordering", [&]() -> std::string {
        if (lindblad_channels(cfg.system).empty())
            return "SKIP:all decay rates are zero";
        const auto sched =
            build_inversion_schedule(cfg.system, durations, cfg.pulses.shape, cfg.pulses.gap_ns);
        const auto lossy = propagate_with_policy(ground_state(n), sched, cfg.system, policy);
        const auto ideal_sys = without_decay(cfg.system);
        const auto ideal = propagate_with_policy(ground_state(n), sched, ideal_sys, policy);
        const double y = yield_metric(DensityMatrix(lossy.final_state()));
        const double yi = yield_metric(DensityMatrix(ideal.final_state()));
        if (!(y < yi)) check_fail("dissipative yield " + num6(y) +
                                  " not below ideal yield " + num6(yi));
        return "dissipative yield " + num6(y) + " < ideal " + num6(yi);
    });

    if (out.failed) {
        std::cout << "validate: FAIL\n";
        return 1;
    }
    std::cout << "validate: PASS\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"N-level ladder population inversion: simulate, sweep, optimize, validate"};
    app.require_subcommand(1);

    CliOptions o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON config file (default: built-in Rb demo)");
        sub->add_option("--out", o.out_dir,
                        "output directory (overrides LADDER_OUT_DIR and the config)");
        sub->add_flag("--no-decay", o.no_decay, "treat every level as stable");
        sub->add_option("--step-divisor", o.step_divisor,
                        "integration step = shortest pulse duration / divisor");
        sub->add_option("--threads", o.threads, "sweep worker threads (0 = one per core)");
    };

    auto* sim = app.add_subcommand("simulate", "propagate one pulse schedule and write results");
    add_common(sim);
    sim->add_flag("--ideal-compare", o.ideal_compare,
                  "also run with decay off and write *_ideal outputs");
    auto* swp = app.add_subcommand("sweep", "scan total times and duration ratios");
    add_common(swp);
    auto* opt = app.add_subcommand("optimize", "search duration ratios for the best yield");
    add_common(opt);
    opt->add_option("--total-time", o.total_time, "total schedule time in ns");
    auto* val = app.add_subcommand("validate", "run the engine self-check battery");
    add_common(val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const RunConfig cfg = load_config(o);
        if (sim->parsed()) return cmd_simulate(cfg, o);
        if (swp->parsed()) return cmd_sweep(cfg, o);
        if (opt->parsed()) return cmd_optimize(cfg, o);
        return cmd_validate(cfg, o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
