#include "surge/moc.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace surge {

// -------------------------------------------------------------
// ValveSchedule
// -------------------------------------------------------------

ValveSchedule ValveSchedule::power_law(double closure_time, double exponent) {
    if (!(closure_time > 0.0)) throw std::invalid_argument("valve closure_time must be > 0");
    if (!(exponent > 0.0)) throw std::invalid_argument("valve exponent must be > 0");
    ValveSchedule s;
    s.law_ = Law::power;
    s.closure_time_ = closure_time;
    s.exponent_ = exponent;
    return s;
}

ValveSchedule ValveSchedule::tabulated(double closure_time, std::vector<std::pair<double, double>> points) {
    if (!(closure_time > 0.0)) throw std::invalid_argument("valve closure_time must be > 0");
    if (points.size() < 2) throw std::invalid_argument("valve table needs at least two points");
    if (points.front() != std::pair{0.0, 1.0} || points.back() != std::pair{1.0, 0.0})
        throw std::invalid_argument("valve table must start at (0, 1) and end at (1, 0)");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].first > points[i - 1].first))
            throw std::invalid_argument("valve table times must be strictly increasing");
        if (points[i].second > points[i - 1].second)
            throw std::invalid_argument("valve table openings must be non-increasing");
    }
    ValveSchedule s;
    s.law_ = Law::table;
    s.closure_time_ = closure_time;
    s.table_ = std::move(points);
    return s;
}

double ValveSchedule::opening(double time) const {
    if (time <= 0.0) return 1.0;
    if (time >= closure_time_) return 0.0;
    const double r = time / closure_time_;
    if (law_ == Law::power) return std::pow(1.0 - r, exponent_);

    auto hi = std::upper_bound(table_.begin(), table_.end(), r,
                               [](double v, const auto& p) { return v < p.first; });
    auto lo = hi - 1;
    const double w = (r - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

TimeGrid TimeGrid::for_duration(const PipelineNetwork& network, double seconds) {
    const double dt = courant_time_step(network);
    const double n = std::ceil(seconds / dt - 1e-9);
    return {dt, static_cast<std::size_t>(std::max(0.0, n))};
}

ValveReference ValveReference::from_steady_state(const PipelineNetwork& network, const SolverState& steady) {
    if (!network.has_valve()) return {};
    return {steady.flow_down[steady.flow_down.size() - 1], steady.head[steady.head.size() - 1]};
}

// -------------------------------------------------------------
// Characteristics
// -------------------------------------------------------------

double friction_term(const PipeSegment& pipe, double dt) {
    return pipe.friction_factor * dt / (2.0 * pipe.diameter * pipe.area());
}

double cplus(const SolverState& state, std::size_t node, const PipelineNetwork& network, double dt) {
    if (node == 0 || node >= network.node_count())
        throw BoundaryMisuseError("C+ needs a pipe entering node " + std::to_string(node));
    const auto pipe = static_cast<Eigen::Index>(node - 1);
    const auto& p = network.pipes[node - 1];
    const double q = state.flow_up[pipe];
    return q + admittance(network.fluid, p) * state.head[pipe] - friction_term(p, dt) * q * std::abs(q);
}

double cminus(const SolverState& state, std::size_t node, const PipelineNetwork& network, double dt) {
    if (node + 1 >= network.node_count())
        throw BoundaryMisuseError("C- needs a pipe leaving node " + std::to_string(node));
    const auto pipe = static_cast<Eigen::Index>(node);
    const auto& p = network.pipes[node];
    const double q = state.flow_down[pipe];
    return q - admittance(network.fluid, p) * state.head[pipe + 1] - friction_term(p, dt) * q * std::abs(q);
}

CharacteristicCoefficients<double> characteristic_coefficients(const SolverState& state, std::size_t node,
                                                               const PipelineNetwork& network, double dt) {
    return {cplus(state, node, network, dt), cminus(state, node, network, dt),
            admittance(network.fluid, network.pipes[node == 0 ? 0 : node - 1])};
}

// -------------------------------------------------------------
// Network step
// -------------------------------------------------------------

namespace {

void check_dims(const SolverState& state, const PipelineNetwork& network, std::span<const double> per_node) {
    const auto n = static_cast<Eigen::Index>(network.node_count());
    if (state.head.size() != n || state.flow_up.size() != n - 1 || state.flow_down.size() != n - 1 ||
        state.leak_rate.size() != n)
        throw DimensionMismatchError("solver state does not match the network");
    if (per_node.size() != network.node_count())
        throw DimensionMismatchError("per-node leak vector does not match the network");
}

template <typename InteriorSolver>
SolverState advance_impl(const SolverState& state, const PipelineNetwork& network, const BoundaryInputs& inputs,
                         double dt, ReverseFlowPolicy policy, InteriorSolver&& solve_interior) {
    const std::size_t n = network.node_count();
    const auto last = static_cast<Eigen::Index>(n - 1);
    const double g = network.fluid.gravity;
    const double ca = admittance(network.fluid, network.pipes.front());

    SolverState next = SolverState::zeros(n);
    next.time = state.time + dt;

    try {
        const auto up = upstream_reservoir_update(cminus(state, 0, network, dt), ca, inputs.upstream_head,
                                                  network.entrance_loss, network.pipes.front().area(), g, policy);
        next.head[0] = up.head;
        next.flow_up[0] = up.flow;
    } catch (const ReverseFlowError& e) {
        throw ReverseFlowError(e.what(), 0);
    }

    for (std::size_t node = 1; node + 1 < n; ++node) {
        const auto k = static_cast<Eigen::Index>(node);
        const auto s = solve_interior(node, characteristic_coefficients(state, node, network, dt));
        next.head[k] = s.head;
        next.flow_down[k - 1] = s.flow_in;
        next.flow_up[k] = s.flow_out;
        next.leak_rate[k] = s.leak_rate;
    }

    const double cp = cplus(state, n - 1, network, dt);
    try {
        const auto end = network.has_valve()
                             ? valve_update(cp, ca, inputs.valve_coefficient, inputs.downstream_head, policy)
                             : dead_end_update(cp, ca);
        next.head[last] = end.head;
        next.flow_down[last - 1] = end.flow;
    } catch (const ReverseFlowError& e) {
        throw ReverseFlowError(e.what(), n - 1);
    }
    return next;
}

}  // namespace

SolverState advance(const SolverState& state, const PipelineNetwork& network, const BoundaryInputs& inputs,
                    std::span<const double> leak_lambda, double dt, ReverseFlowPolicy policy) {
    check_dims(state, network, leak_lambda);
    return advance_impl(state, network, inputs, dt, policy,
                        [&](std::size_t node, const CharacteristicCoefficients<double>& c) {
                            return leak_node_update(c, leak_lambda[node], network.nodes[node].elevation);
                        });
}

SolverState advance_prescribed(const SolverState& state, const PipelineNetwork& network,
                               const BoundaryInputs& inputs, std::span<const double> leak_rates, double dt,
                               ReverseFlowPolicy policy) {
    check_dims(state, network, leak_rates);
    return advance_impl(state, network, inputs, dt, policy,
                        [&](std::size_t node, const CharacteristicCoefficients<double>& c) {
                            return prescribed_leak_update(c, leak_rates[node]);
                        });
}

BoundaryInputs boundary_inputs_at(double time, const PipelineNetwork& network, const ValveSchedule* schedule,
                                  const ValveReference& reference) {
    BoundaryInputs in;
    in.upstream_head = network.upstream_head;
    if (!network.has_valve()) return in;
    in.downstream_head = *network.downstream_head;
    const double tau = schedule ? schedule->opening(time) : 1.0;
    in.valve_coefficient = valve_coefficient(tau, reference.steady_flow, reference.steady_head,
                                             in.downstream_head, admittance(network.fluid, network.pipes.back()));
    return in;
}

SolverState step(const SolverState& state, const PipelineNetwork& network, const ValveSchedule* schedule,
                 const ValveReference& reference, const BurstRegistry& bursts, double dt) {
    const auto lambdas = bursts.lambdas();
    return advance(state, network, boundary_inputs_at(state.time + dt, network, schedule, reference), lambdas, dt,
                   ReverseFlowPolicy::reject);
}

}  // namespace surge
