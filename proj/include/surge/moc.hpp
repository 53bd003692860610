#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "surge/burst.hpp"
#include "surge/error.hpp"
#include "surge/hydraulics.hpp"

namespace surge {

// -------------------------------------------------------------
// Characteristic-line kernels
//
// The C+ relation Q = cp - ca H holds along dx/dt = +a and the C- relation
// Q = cn + ca H along dx/dt = -a. Everything below is written in terms of
// the three intercepts so the same kernels serve the truth simulator, the
// filter's process model and the oracle tests.
// -------------------------------------------------------------

template <typename Scalar = double>
struct CharacteristicCoefficients {
    Scalar cp{};  // C+ intercept, m^3/s
    Scalar cn{};  // C- intercept, m^3/s
    Scalar ca{};  // admittance gA/a, m^2/s
};

template <typename Scalar = double>
struct NodeSolution {
    Scalar flow{};
    Scalar head{};
};

template <typename Scalar = double>
struct LeakNodeSolution {
    Scalar flow_in{};   // Q_{i2}, downstream end of the pipe entering the node
    Scalar flow_out{};  // Q_{(i+1)1}, upstream end of the pipe leaving it
    Scalar head{};
    Scalar leak_rate{};
};

/// How reservoir and valve boundaries treat a flow reversal.
///  reject     - the forward-flow formulas are used as written and a negative
///               discriminant raises ReverseFlowError.
///  sign_aware - losses are applied as Q|Q| so a reversed flow has a real root.
enum class ReverseFlowPolicy { reject, sign_aware };

template <typename Scalar>
NodeSolution<Scalar> interior_update(const CharacteristicCoefficients<Scalar>& c) {
    const Scalar q = (c.cp + c.cn) / Scalar(2);
    return {q, (c.cp - q) / c.ca};
}

template <typename Scalar>
NodeSolution<Scalar> dead_end_update(Scalar cp, Scalar ca) {
    return {Scalar(0), cp / ca};
}

/// Supply reservoir with entrance loss: H = H_R1 - (1+eta) Q^2 / (2 g A^2)
/// combined with the C- relation.
template <typename Scalar>
NodeSolution<Scalar> upstream_reservoir_update(Scalar cn, Scalar ca, Scalar reservoir_head, Scalar entrance_loss,
                                               Scalar area, Scalar gravity,
                                               ReverseFlowPolicy policy = ReverseFlowPolicy::reject) {
    using std::sqrt;
    const Scalar loss = (Scalar(1) + entrance_loss) / (Scalar(2) * gravity * area * area);
    const Scalar k1 = ca * loss;
    const Scalar c = cn + ca * reservoir_head;

    Scalar q;
    if (policy == ReverseFlowPolicy::sign_aware && c < Scalar(0)) {
        // K1 Q|Q| + Q - c = 0 with Q < 0
        q = Scalar(2) * c / (Scalar(1) + sqrt(Scalar(1) - Scalar(4) * k1 * c));
        return {q, reservoir_head + loss * q * q};
    }
    const Scalar disc = Scalar(1) + Scalar(4) * k1 * c;
    if (disc < Scalar(0)) throw ReverseFlowError("supply reservoir: negative discriminant");
    // (-1 + sqrt(disc)) / (2 K1), written without cancellation; K1 = 0 is exact.
    q = Scalar(2) * c / (Scalar(1) + sqrt(disc));
    return {q, reservoir_head - loss * q * q};
}

/// Orifice-plate discharge coefficient as a function of area ratio.
template <typename Scalar>
Scalar discharge_coefficient(Scalar area_ratio) {
    using std::pow;
    if (!(area_ratio >= Scalar(0) && area_ratio <= Scalar(1)))
        throw DomainError("discharge_coefficient: area ratio must lie in [0, 1]");
    return Scalar(0.05959) + Scalar(0.0312) * pow(area_ratio, Scalar(2.1)) - Scalar(0.184) * pow(area_ratio, Scalar(6));
}

/// C_v = (tau Q0)^2 / (ca (H_steady - H_R2)).
template <typename Scalar>
Scalar valve_coefficient(Scalar opening, Scalar steady_flow, Scalar steady_head, Scalar downstream_head, Scalar ca) {
    if (!(steady_head > downstream_head))
        throw DomainError("valve_coefficient: steady valve head must exceed downstream head");
    const Scalar tq = opening * steady_flow;
    return tq * tq / (ca * (steady_head - downstream_head));
}

/// Valve discharging to a reservoir, parameterised by C_v directly.
/// Solves Q^2 + C_v Q + C_v (ca H_R2 - cp) = 0.
template <typename Scalar>
NodeSolution<Scalar> valve_update(Scalar cp, Scalar ca, Scalar cv, Scalar downstream_head,
                                  ReverseFlowPolicy policy = ReverseFlowPolicy::reject) {
    using std::sqrt;
    if (cv == Scalar(0)) return dead_end_update(cp, ca);
    const Scalar drive = cp - ca * downstream_head;
    Scalar q;
    if (policy == ReverseFlowPolicy::sign_aware && drive < Scalar(0)) {
        // Q|Q| = C_v (cp - Q - ca H_R2) with Q < 0
        q = Scalar(2) * cv * drive / (cv + sqrt(cv * cv - Scalar(4) * cv * drive));
    } else {
        const Scalar disc = cv * cv + Scalar(4) * cv * drive;
        if (disc < Scalar(0)) throw ReverseFlowError("valve: negative discriminant");
        q = Scalar(2) * cv * drive / (cv + sqrt(disc));
    }
    return {q, (cp - q) / ca};
}

template <typename Scalar>
NodeSolution<Scalar> valve_boundary_update(Scalar cp, Scalar ca, Scalar opening, Scalar steady_flow,
                                           Scalar steady_head, Scalar downstream_head,
                                           ReverseFlowPolicy policy = ReverseFlowPolicy::reject) {
    if (!(opening >= Scalar(0) && opening <= Scalar(1)))
        throw DomainError("valve opening must lie in [0, 1]");
    const Scalar cv = valve_coefficient(opening, steady_flow, steady_head, downstream_head, ca);
    return valve_update(cp, ca, cv, downstream_head, policy);
}

/// Interior node with an orifice leak Q_L = lambda sqrt(H - z).
///
/// Continuity Q_in = Q_out + Q_L with both characteristics gives
///   2 ca h + lambda sqrt(h) = cp - cn - 2 ca z,   h = H - z,
/// a quadratic in sqrt(h). When the right side is negative the node cannot
/// sustain outflow; the leak stops and the node is solved as a plain
/// junction.
template <typename Scalar>
LeakNodeSolution<Scalar> leak_node_update(const CharacteristicCoefficients<Scalar>& c, Scalar lambda,
                                          Scalar elevation) {
    using std::sqrt;
    const Scalar rhs = c.cp - c.cn - Scalar(2) * c.ca * elevation;
    if (lambda == Scalar(0) || rhs < Scalar(0)) {
        const auto s = interior_update(c);
        return {s.flow, s.flow, s.head, Scalar(0)};
    }
    const Scalar root = (-lambda + sqrt(lambda * lambda + Scalar(8) * c.ca * rhs)) / (Scalar(4) * c.ca);
    const Scalar head = elevation + root * root;
    return {c.cp - c.ca * head, c.cn + c.ca * head, head, lambda * root};
}

/// Interior node whose leak discharge is given rather than modelled.
template <typename Scalar>
LeakNodeSolution<Scalar> prescribed_leak_update(const CharacteristicCoefficients<Scalar>& c, Scalar leak_rate) {
    if (leak_rate == Scalar(0)) {
        const auto s = interior_update(c);
        return {s.flow, s.flow, s.head, Scalar(0)};
    }
    const Scalar head = (c.cp - c.cn - leak_rate) / (Scalar(2) * c.ca);
    return {c.cp - c.ca * head, c.cn + c.ca * head, head, leak_rate};
}

// -------------------------------------------------------------
// Valve closure and time grid
// -------------------------------------------------------------

/// Dimensionless valve opening tau(t): 1 at t <= 0, 0 at t >= closure_time,
/// non-increasing in between.
class ValveSchedule {
public:
    enum class Law { power, table };

    static ValveSchedule linear(double closure_time) { return power_law(closure_time, 1.0); }
    static ValveSchedule power_law(double closure_time, double exponent);
    /// Points are (t / closure_time, tau), strictly increasing in the first
    /// coordinate, starting at (0, 1) and ending at (1, 0).
    static ValveSchedule tabulated(double closure_time, std::vector<std::pair<double, double>> points);

    double opening(double time) const;
    double closure_time() const { return closure_time_; }
    Law law() const { return law_; }
    double exponent() const { return exponent_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

private:
    ValveSchedule() = default;

    Law law_ = Law::power;
    double closure_time_ = 0.0;
    double exponent_ = 1.0;
    std::vector<std::pair<double, double>> table_;
};

struct TimeGrid {
    double dt = 0.0;
    std::size_t steps = 0;

    static TimeGrid for_duration(const PipelineNetwork& network, double seconds);
};

/// Reference flow and valve head of the fully open valve, needed for C_v.
struct ValveReference {
    double steady_flow = 0.0;
    double steady_head = 0.0;

    static ValveReference from_steady_state(const PipelineNetwork& network, const SolverState& steady);
};

/// Boundary values in force at the end of a step. For a dead-end network
/// downstream_head and valve_coefficient are ignored.
struct BoundaryInputs {
    double upstream_head = 0.0;
    double downstream_head = 0.0;
    double valve_coefficient = 0.0;
};

// -------------------------------------------------------------
// Network-level operations
// -------------------------------------------------------------

double friction_term(const PipeSegment& pipe, double dt);

/// C+ intercept at `node` (needs the pipe entering it).
double cplus(const SolverState& state, std::size_t node, const PipelineNetwork& network, double dt);
/// C- intercept at `node` (needs the pipe leaving it).
double cminus(const SolverState& state, std::size_t node, const PipelineNetwork& network, double dt);

/// Both intercepts at an interior node. Throws BoundaryMisuseError for the
/// first or last node.
CharacteristicCoefficients<double> characteristic_coefficients(const SolverState& state, std::size_t node,
                                                               const PipelineNetwork& network, double dt);

/// One MOC step with orifice leaks; `leak_lambda[n]` = 0 means no leak at n.
SolverState advance(const SolverState& state, const PipelineNetwork& network, const BoundaryInputs& inputs,
                    std::span<const double> leak_lambda, double dt,
                    ReverseFlowPolicy policy = ReverseFlowPolicy::reject);

/// One MOC step where every interior node discharges the given leak rate.
SolverState advance_prescribed(const SolverState& state, const PipelineNetwork& network,
                               const BoundaryInputs& inputs, std::span<const double> leak_rates, double dt,
                               ReverseFlowPolicy policy = ReverseFlowPolicy::reject);

/// Boundary inputs at time t for a network driven by a valve schedule.
BoundaryInputs boundary_inputs_at(double time, const PipelineNetwork& network, const ValveSchedule* schedule,
                                  const ValveReference& reference);

/// Advance the truth simulation one step: tau is evaluated at the new time
/// and leaking nodes are taken from the registry.
SolverState step(const SolverState& state, const PipelineNetwork& network, const ValveSchedule* schedule,
                 const ValveReference& reference, const BurstRegistry& bursts, double dt);

}  // namespace surge
