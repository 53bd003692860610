#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surge/scenario.hpp"
#include "surge/validation.hpp"

namespace fs = std::filesystem;
using namespace surge;

namespace {

struct CommonArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::string out = "out";
};

void add_common(CLI::App* cmd, CommonArgs& a, bool scenario_required = true) {
    cmd->add_option("scenario", a.scenario, "Preset name or scenario/manifest file")->required(scenario_required);
    cmd->add_option("--seed", a.seed, "RNG seed (burst draws for simulate, noise for measure)");
    cmd->add_option("--steps", a.steps, "Number of time steps (overrides run.duration)");
    cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
}

ScenarioConfig load(const CommonArgs& a) {
    auto c = load_scenario(a.scenario);
    if (a.steps) c.steps = *a.steps;
    return c;
}

std::string path_or(const std::string& configured, const fs::path& dir, const char* fallback) {
    return configured.empty() ? (dir / fallback).string() : configured;
}

BurstMode parse_mode(const std::string& s) {
    if (s == "none" || s == "no-burst") return BurstMode::none;
    if (s == "deterministic") return BurstMode::deterministic;
    return BurstMode::probabilistic;
}

int run_simulate(const CommonArgs& a, const std::string& mode, const std::vector<std::string>& forced) {
    auto c = load(a);
    if (!mode.empty()) c.burst.mode = parse_mode(mode);
    if (a.seed) c.burst.rng_seed = *a.seed;
    for (const auto& f : forced) {
        const auto at = f.find('@');
        if (at == std::string::npos) throw CLI::ValidationError("--force", "expected node@step, got " + f);
        c.forced_bursts.push_back({std::stoul(f.substr(0, at)), std::stoul(f.substr(at + 1))});
    }
    c.validate();

    const auto run = simulate(c);
    const fs::path dir(a.out);
    const auto ts = path_or(c.output.timeseries, dir, "timeseries.csv");
    const auto bl = path_or(c.output.bursts, dir, "bursts.csv");
    const auto mf = path_or(c.output.manifest, dir, "manifest.txt");
    write_timeseries(ts, run.states);
    write_burst_log(bl, run.bursts);
    write_manifest(mf, c, run);

    const auto m = transient_metrics(run, c.network.node_count() - 2);
    std::printf("scenario %s: %zu steps, dt = %.6f s, a = %.3f m/s\n", c.name.c_str(), run.states.size() - 1,
                run.dt, run.wave_speed);
    std::printf("node %zu peak head %.3f m at t = %.3f s\n", c.network.node_count() - 1, m.peak_head, m.peak_time);
    if (run.bursts.empty()) std::printf("no bursts\n");
    for (const auto& e : run.bursts)
        std::printf("burst node %zu (index %zu) at t = %.3f s, step %zu, %s\n", e.node + 1, e.node, e.time, e.step,
                    e.cause == BurstCause::forced ? "forced" : "stress");
    std::printf("wrote %s, %s, %s\n", ts.c_str(), bl.c_str(), mf.c_str());
    return 0;
}

int run_measure(const CommonArgs& a, const std::string& truth_path, std::optional<double> variance) {
    auto c = load(a);
    if (a.seed) c.noise_seed = *a.seed;
    if (variance) c.noise_variance = *variance;
    c.validate();
    const auto truth = read_timeseries(truth_path);
    const auto z = simulate_measurements(truth, c.noise_variance, c.noise_seed);
    const auto out = path_or(c.output.measurements, fs::path(a.out), "measurements.csv");
    write_measurements(out, z, c.grid().dt);
    std::printf("%zu measurements, variance %g, seed %llu -> %s\n", z.size(), c.noise_variance,
                static_cast<unsigned long long>(c.noise_seed), out.c_str());
    return 0;
}

int run_estimate(const CommonArgs& a, const std::string& meas_path, double threshold) {
    auto c = load(a);
    auto z = read_measurements(meas_path);
    if (a.steps && z.size() > *a.steps + 1) z.resize(*a.steps + 1);
    const auto dt = c.grid().dt;
    const auto est = estimate_states(estimate(c, z), c.network, dt);
    const auto out = path_or(c.output.estimates, fs::path(a.out), "estimates.csv");
    write_timeseries(out, est);

    std::printf("node  leak_estimate  flag\n");
    for (std::size_t node = 1; node + 1 < c.network.node_count(); ++node) {
        std::vector<double> s;
        for (const auto& st : est) s.push_back(st.leak_rate[static_cast<Eigen::Index>(node)]);
        const double q = final_quarter_mean(s);
        std::printf("%4zu  %13.6f  %s\n", node + 1, q, q >= threshold ? "LEAK" : "-");
    }
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int run_compare(const std::string& truth_path, const std::string& est_path) {
    const auto summary = compare(read_timeseries(truth_path), read_timeseries(est_path));
    std::printf("node  truth          estimate       abs_error      rel_error\n");
    for (const auto& l : summary.leaks)
        std::printf("%4zu  %.8f  %.8f  %.8f  %s\n", l.node + 1, l.truth, l.estimate, l.abs_error,
                    std::isnan(l.rel_error) ? "n/a" : format_number(l.rel_error).c_str());
    std::printf("head rmse upstream %.6f m, downstream %.6f m\n", summary.head_rmse_upstream,
                summary.head_rmse_downstream);
    return 0;
}

int run_validate(std::size_t seeds) {
    std::vector<CriterionResult> results{check_wave_speed(), check_no_burst_transient(), check_burst_localization(),
                                         check_leak_asymptote(), check_filter_estimates(seeds)};
    bool ok = true;
    for (const auto& r : results) {
        std::cout << format_result(r) << "\n";
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water hammer, pipe burst and leak estimation simulator"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CommonArgs sim_args, meas_args, est_args;
    std::string mode;
    std::vector<std::string> forced;
    auto* sim = app.add_subcommand("simulate", "Truth run: MOC transient with the burst model");
    add_common(sim, sim_args);
    sim->add_option("--mode", mode, "Burst mode")
        ->check(CLI::IsMember({"none", "no-burst", "deterministic", "probabilistic"}));
    sim->add_option("--force", forced, "Forced burst node@step (0-based node index), repeatable");

    std::string truth_path;
    std::optional<double> variance;
    auto* meas = app.add_subcommand("measure", "Noisy head measurements at both ends from a truth time series");
    add_common(meas, meas_args);
    meas->add_option("--truth", truth_path, "Truth time series CSV")->required()->check(CLI::ExistingFile);
    meas->add_option("--variance", variance, "Noise variance, m^2");

    std::string meas_path;
    double threshold = 0.15 * 0.0063;
    auto* est = app.add_subcommand("estimate", "Extended Kalman filter over a measurement file");
    add_common(est, est_args);
    est->add_option("--measurements", meas_path, "Measurement CSV")->required()->check(CLI::ExistingFile);
    est->add_option("--threshold", threshold, "Leak flag threshold, m^3/s")->capture_default_str();

    std::string cmp_truth, cmp_est;
    auto* cmp = app.add_subcommand("compare", "Truth versus estimate error summary");
    cmp->add_option("--truth", cmp_truth, "Truth time series CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("--estimates", cmp_est, "Estimate time series CSV")->required()->check(CLI::ExistingFile);

    std::size_t seeds = 5;
    auto* val = app.add_subcommand("validate", "Run the preset acceptance checks");
    val->add_option("--seeds", seeds, "Noise seeds for the filter check")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return run_simulate(sim_args, mode, forced);
        if (*meas) return run_measure(meas_args, truth_path, variance);
        if (*est) return run_estimate(est_args, meas_path, threshold);
        if (*cmp) return run_compare(cmp_truth, cmp_est);
        if (*val) return run_validate(seeds);
    } catch (const ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
