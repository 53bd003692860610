#include "surge/validation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace surge {

namespace {

constexpr double kReferenceLeakRate = 0.0063;  // m^3/s
constexpr std::size_t kWatchNode = 5;      // 1-based node 6

std::string fixed(double v, int digits = 4) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(digits);
    o << v;
    return o.str();
}

ScenarioConfig preset(const char* name) { return *find_preset(name); }

std::vector<double> leak_series(const RunArtifacts& run, std::size_t node) {
    std::vector<double> s;
    s.reserve(run.states.size());
    for (const auto& st : run.states) s.push_back(st.leak_rate[static_cast<Eigen::Index>(node)]);
    return s;
}

}  // namespace

TransientMetrics transient_metrics(const RunArtifacts& run, std::size_t node) {
    const auto k = static_cast<Eigen::Index>(node);
    TransientMetrics m;
    m.peak_head = -std::numeric_limits<double>::infinity();
    std::vector<double> heads;
    heads.reserve(run.states.size());
    for (const auto& s : run.states) {
        heads.push_back(s.head[k]);
        if (s.head[k] > m.peak_head) {
            m.peak_head = s.head[k];
            m.peak_time = s.time;
        }
    }
    m.final_quarter_head = final_quarter_mean(heads);
    return m;
}

std::vector<double> mean_leak_estimates(const ScenarioConfig& config, const RunArtifacts& truth,
                                        const std::vector<std::uint64_t>& seeds) {
    const std::size_t n = config.network.node_count();
    std::vector<double> mean(n - 2, 0.0);
    for (const auto seed : seeds) {
        const auto z = simulate_measurements(truth.states, config.noise_variance, seed);
        const auto est = estimate_states(estimate(config, z), config.network, truth.dt);
        for (std::size_t node = 1; node + 1 < n; ++node) {
            std::vector<double> s;
            s.reserve(est.size());
            for (const auto& st : est) s.push_back(st.leak_rate[static_cast<Eigen::Index>(node)]);
            mean[node - 1] += final_quarter_mean(s) / static_cast<double>(seeds.size());
        }
    }
    return mean;
}

CriterionResult check_wave_speed() {
    const auto c = preset("paper-case-a");
    const double a = wave_speed(c.network.fluid, c.network.pipes.front());
    return {1, "wave speed", std::abs(a - 1388.5) <= 0.1, "a = " + fixed(a, 3) + " m/s (target 1388.5 +- 0.1)"};
}

CriterionResult check_no_burst_transient() {
    auto c = preset("paper-case-a");
    c.burst.mode = BurstMode::none;
    const auto run = simulate(c);
    const auto m = transient_metrics(run, kWatchNode);
    const double tc = c.valve->closure_time();
    const bool peak_ok = m.peak_head >= 55.0 && m.peak_head <= 70.0;
    const bool time_ok = std::abs(m.peak_time - tc) <= 2.0;
    const bool tail_ok = std::abs(m.final_quarter_head - 40.0) <= 3.0;
    return {2, "no-burst transient", peak_ok && time_ok && tail_ok,
            "node 6 peak " + fixed(m.peak_head, 2) + " m [55,70] " + (peak_ok ? "ok" : "FAIL") + ", at t = " +
                fixed(m.peak_time, 2) + " s [" + fixed(tc - 2, 0) + "," + fixed(tc + 2, 0) + "] " +
                (time_ok ? "ok" : "FAIL") + ", final-quarter mean " + fixed(m.final_quarter_head, 2) +
                " m [37,43] " + (tail_ok ? "ok" : "FAIL")};
}

CriterionResult check_burst_localization() {
    const auto c = preset("paper-case-a");
    const auto run = simulate(c);
    const double tc = c.valve->closure_time();
    std::set<std::size_t> labels;
    bool time_ok = !run.bursts.empty();
    std::string times;
    for (const auto& e : run.bursts) {
        labels.insert(e.node + 1);
        time_ok = time_ok && std::abs(e.time - tc) <= 2.0;
        times += (times.empty() ? "" : ", ") + std::to_string(e.node + 1) + "@" + fixed(e.time, 2) + "s";
    }
    const bool set_ok = labels == std::set<std::size_t>{4, 5, 6};
    return {3, "burst localization", set_ok && time_ok,
            "bursts {" + times + "}; set " + (set_ok ? "ok" : "FAIL (want {4,5,6})") + ", timing within +-2 s of " +
                fixed(tc, 0) + " s " + (time_ok ? "ok" : "FAIL")};
}

CriterionResult check_leak_asymptote() {
    const auto c = preset("paper-case-a");
    const auto run = simulate(c);
    bool ok = !run.bursts.empty();
    std::string detail;
    for (const auto node : run.registry.burst_nodes()) {
        const double q = final_quarter_mean(leak_series(run, node));
        const bool node_ok = std::abs(q - kReferenceLeakRate) <= 0.05 * kReferenceLeakRate;
        ok = ok && node_ok;
        detail += (detail.empty() ? "" : ", ") + std::string("node ") + std::to_string(node + 1) + " " +
                  fixed(q, 6) + (node_ok ? "" : " FAIL");
    }
    return {4, "leak-rate asymptote", ok, detail + " (target 0.0063 +- 5%)"};
}

CriterionResult check_filter_estimates(std::size_t seed_count) {
    const auto c = preset("paper-case-a");
    const auto truth = simulate(c);
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < seed_count; ++s) seeds.push_back(c.noise_seed + s);
    const auto est = mean_leak_estimates(c, truth, seeds);

    bool ok = true;
    std::string detail;
    for (std::size_t node = 1; node + 1 < c.network.node_count(); ++node) {
        const double e = est[node - 1];
        const double t = final_quarter_mean(leak_series(truth, node));
        bool node_ok;
        if (truth.registry.is_burst(node))
            node_ok = std::abs(e - t) <= 0.05 * t;
        else
            node_ok = e < 0.15 * kReferenceLeakRate;
        ok = ok && node_ok;
        detail += (detail.empty() ? "" : ", ") + std::string("node ") + std::to_string(node + 1) + " est " +
                  fixed(e, 5) + " truth " + fixed(t, 5) + (node_ok ? "" : " FAIL");
    }
    return {5, "filter leak estimates", ok, detail + " (" + std::to_string(seed_count) + " seeds)"};
}

std::vector<CriterionResult> validate_presets() {
    return {check_wave_speed(), check_no_burst_transient(), check_burst_localization(), check_leak_asymptote(),
            check_filter_estimates()};
}

std::string format_result(const CriterionResult& r) {
    return std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name +
           "): " + r.detail;
}

}  // namespace surge
