#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "surge/moc.hpp"
#include "surge/scenario.hpp"

using namespace surge;

namespace {

PipelineNetwork case_a() { return find_preset("paper-case-a")->network; }

}  // namespace

TEST_CASE("wave speed for the valve-closure line") {
    const auto net = case_a();
    // hand evaluation: K/rho = 2.1994e6, (K/E)(D/e) = 0.0053644 * 26.2467
    const double k_rho = 2.1994e9 / 1000.0;
    const double stiff = 1.0 + (2.1994e9 / 4.1e11) * (0.5 / 0.01905) * 1.0;
    const double oracle = std::sqrt(k_rho / stiff);
    const double a = wave_speed(net.fluid, net.pipes.front());
    CHECK(a == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(std::abs(a - 1388.5) < 0.1);
}

TEST_CASE("rigid pipe limits") {
    auto net = case_a();
    const double rigid = std::sqrt(2.1994e9 / 1000.0);
    CHECK(rigid == doctest::Approx(1483.0).epsilon(1e-4));

    PipeSegment stiff = net.pipes.front();
    stiff.youngs_modulus = 1e300;
    CHECK(wave_speed(net.fluid, stiff) == doctest::Approx(rigid).epsilon(1e-12));

    PipeSegment unanchored = net.pipes.front();
    unanchored.anchoring_coefficient = 0.0;
    CHECK(wave_speed(net.fluid, unanchored) == rigid);
}

TEST_CASE("wave speed rejects non-physical material") {
    auto net = case_a();
    PipeSegment p = net.pipes.front();
    p.anchoring_coefficient = -1e6;
    CHECK_THROWS_AS(wave_speed(net.fluid, p), InvalidMaterialError);
}

TEST_CASE("steady flow matches the closed-form energy balance") {
    const auto net = case_a();
    const double g = 9.8;
    const double A = M_PI * 0.25 * 0.25;
    // sum of loss coefficients per (Q^2 / 2gA^2)
    const double k = (1.0 + 0.5) + 0.015 * 600.0 / 0.5 + 1.0 / (0.6 * 0.6);
    const double q_closed = std::sqrt(10.0 * 2.0 * g * A * A / k);

    const auto sf = steady_flow(net);
    CHECK(sf.flow == doctest::Approx(q_closed).epsilon(1e-10));
    CHECK(sf.velocity == doctest::Approx(q_closed / A).epsilon(1e-10));
    CHECK(std::abs(sf.residual) < 1e-9);
    CHECK(sf.flow == doctest::Approx(0.5824).epsilon(1e-3));

    const auto s = steady_state(net);
    const double h_valve = 30.0 + std::pow(q_closed / (0.6 * A), 2) / (2.0 * g);
    CHECK(s.head[6] == doctest::Approx(h_valve).epsilon(1e-10));
    CHECK(s.head[6] == doctest::Approx(31.25).epsilon(1e-3));
    for (int i = 0; i < 6; ++i) {
        CHECK(s.flow_up[i] == sf.flow);
        CHECK(s.flow_down[i] == sf.flow);
        CHECK(s.head[i] > s.head[i + 1]);
    }
}

TEST_CASE("dead-end steady state is a stagnant column") {
    const auto net = find_preset("paper-case-b")->network;
    const auto s = steady_state(net);
    CHECK(s.head.isConstant(60.0));
    CHECK(s.flow_up.isZero(0.0));
    CHECK(s.flow_down.isZero(0.0));
}

TEST_CASE("steady state is stationary under one step") {
    const auto net = case_a();
    const auto s = steady_state(net);
    const auto ref = ValveReference::from_steady_state(net, s);
    const auto sched = ValveSchedule::linear(20.0);
    const double dt = courant_time_step(net);
    const auto next = advance(s, net, boundary_inputs_at(0.0, net, &sched, ref), std::vector<double>(7, 0.0), dt);
    CHECK((next.head - s.head).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((next.flow_up - s.flow_up).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((next.flow_down - s.flow_down).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("infeasible steady state") {
    auto net = case_a();
    net.downstream_head = 40.0;
    CHECK_THROWS_AS(steady_flow(net), InfeasibleScenarioError);
}

TEST_CASE("pressure head") {
    SolverState s = SolverState::zeros(3);
    s.head << 60.0, 40.0, 30.0;
    CHECK(pressure_head({0, 20.0, NodeKind::supply_reservoir}, s) == 40.0);
    CHECK(pressure_head({1, 0.0, NodeKind::interior}, s) == 40.0);
    CHECK(pressure_head({2, 30.0, NodeKind::dead_end}, s) == 0.0);
}

TEST_CASE("hoop stress at the burst thresholds") {
    const auto net = case_a();
    const auto& pipe = net.pipes.front();
    CHECK(hoop_stress(0.0, net.fluid, pipe) == 0.0);
    // invert sigma = rho g h D / (2e) for h
    const double h80 = 0.8 * 8e6 * 2.0 * 0.01905 / (1000.0 * 9.8 * 0.5);
    const double h100 = 8e6 * 2.0 * 0.01905 / (1000.0 * 9.8 * 0.5);
    CHECK(h80 == doctest::Approx(49.77).epsilon(1e-3));
    CHECK(h100 == doctest::Approx(62.2).epsilon(1e-3));
    CHECK(hoop_stress(h80, net.fluid, pipe) == doctest::Approx(6.4e6).epsilon(1e-12));
    CHECK(hoop_stress(h100, net.fluid, pipe) == doctest::Approx(8e6).epsilon(1e-12));
    CHECK(hoop_stress(2.0 * h80, net.fluid, pipe) == doctest::Approx(2.0 * 6.4e6).epsilon(1e-12));
}

TEST_CASE("network validation") {
    auto net = case_a();
    SUBCASE("pipe count") {
        net.pipes.pop_back();
        CHECK_THROWS_AS(net.validate(), InvalidNetworkError);
    }
    SUBCASE("Courant mismatch") {
        net.pipes[2].length = 50.0;
        CHECK_THROWS_AS(net.validate(), InvalidNetworkError);
    }
    SUBCASE("missing downstream head") {
        net.downstream_head.reset();
        CHECK_THROWS_AS(net.validate(), InvalidNetworkError);
    }
    SUBCASE("thick wall") {
        net.pipes[0].wall_thickness = 0.3;
        CHECK_THROWS_AS(net.validate(), InvalidNetworkError);
    }
}
