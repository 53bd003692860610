#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "surge/scenario.hpp"

using namespace surge;

TEST_CASE("burst probability ramp") {
    const double ys = 8e6;
    CHECK(burst_probability(0.0, ys) == 0.0);
    CHECK(burst_probability(0.8 * ys, ys) == 0.0);
    CHECK(burst_probability(0.9 * ys, ys) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(burst_probability(ys, ys) == 1.0);
    CHECK(burst_probability(2.0 * ys, ys) == 1.0);

    double prev = 0.0;
    for (double f = 0.0; f <= 1.2; f += 0.01) {
        const double p = burst_probability(f * ys, ys);
        CHECK(p >= prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(burst_probability(f * 3.0, 3.0) == doctest::Approx(p).epsilon(1e-12));
        prev = p;
    }
}

TEST_CASE("registry") {
    BurstRegistry r(5);
    CHECK_FALSE(r.is_burst(2));
    r.mark_burst(2, 10, 0.001);
    CHECK(r.is_burst(2));
    CHECK(*r.burst_step(2) == 10);
    r.mark_burst(2, 20, 0.5);
    CHECK(*r.burst_step(2) == 10);
    CHECK(r.lambda(2) == 0.001);
    CHECK(r.burst_nodes() == std::vector<std::size_t>{2});
    CHECK(r.lambdas() == std::vector<double>{0.0, 0.0, 0.001, 0.0, 0.0});
    CHECK_THROWS(r.mark_burst(0, 1, 0.001));
    CHECK_THROWS(r.mark_burst(4, 1, 0.001));
}

TEST_CASE("config validation") {
    BurstModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.threshold_fraction = 1.0;
    CHECK_THROWS(c.validate());
    c.threshold_fraction = 0.8;
    c.default_lambda = 0.0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("steady heads never burst") {
    const auto c = *find_preset("paper-case-a");
    const auto s = steady_state(c.network);
    BurstRegistry r(7);
    UniformStream u(1);
    for (auto mode : {BurstMode::deterministic, BurstMode::probabilistic}) {
        auto cfg = c.burst;
        cfg.mode = mode;
        CHECK(evaluate_bursts(s, c.network, cfg, r, u, 1).empty());
    }
}

TEST_CASE("deterministic burst at the stress threshold") {
    const auto c = *find_preset("paper-case-a");
    auto s = steady_state(c.network);
    const double h80 = 0.8 * 8e6 * 2.0 * 0.01905 / (1000.0 * 9.8 * 0.5);
    s.head[3] = h80 - 1e-6;
    s.head[4] = h80 + 1e-3;
    BurstRegistry r(7);
    UniformStream u(1);
    const auto ev = evaluate_bursts(s, c.network, c.burst, r, u, 42);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].node == 4);
    CHECK(ev[0].step == 42);
    CHECK_FALSE(ev[0].draw.has_value());
    CHECK(r.is_burst(4));
    CHECK(r.lambda(4) == 0.001);
    CHECK_FALSE(r.is_burst(3));

    // burst is permanent and not reported twice
    CHECK(evaluate_bursts(s, c.network, c.burst, r, u, 43).empty());
}

TEST_CASE("the uniform stream is reproducible and in range") {
    UniformStream a(99), b(99), c(100);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.next();
        CHECK(x == b.next());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        differs = differs || x != c.next();
    }
    CHECK(differs);
}

TEST_CASE("probabilistic mode with p = 1 equals deterministic mode") {
    auto det = *find_preset("paper-case-a");
    auto prob = det;
    prob.burst.mode = BurstMode::probabilistic;
    const ProbabilityLaw pinned = [](double hoop, double yield) {
        return burst_probability(hoop, yield) > 0.0 ? 1.0 : 0.0;
    };
    const auto a = simulate(det);
    const auto b = simulate(prob, pinned);
    CHECK(a.registry == b.registry);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK(a.states[k].head == b.states[k].head);
        CHECK(a.states[k].leak_rate == b.states[k].leak_rate);
    }
}

TEST_CASE("probabilistic runs are reproducible per seed") {
    auto c = *find_preset("paper-case-a");
    c.burst.mode = BurstMode::probabilistic;
    c.burst.rng_seed = 5;
    const auto a = simulate(c);
    const auto b = simulate(c);
    CHECK(a.registry == b.registry);
    CHECK(a.bursts == b.bursts);
    for (const auto& e : a.bursts) {
        REQUIRE(e.draw.has_value());
        CHECK(*e.draw < e.probability);
    }
}

TEST_CASE("deterministic run bursts nodes 4, 5 and 6") {
    const auto run = simulate(*find_preset("paper-case-a"));
    CHECK(run.registry.burst_nodes() == std::vector<std::size_t>{3, 4, 5});
}

TEST_CASE("mode none never bursts") {
    auto c = *find_preset("paper-case-a");
    c.burst.mode = BurstMode::none;
    CHECK(simulate(c).bursts.empty());
}
