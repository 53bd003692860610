#include "surge/hydraulics.hpp"

#include <limits>
#include <string>

namespace surge {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

std::string pipe_label(std::size_t i) { return "pipe " + std::to_string(i); }

}  // namespace

void Fluid::validate() const {
    if (!positive_finite(density)) throw InvalidNetworkError("fluid.density must be > 0");
    if (!positive_finite(bulk_modulus)) throw InvalidNetworkError("fluid.bulk_modulus must be > 0");
    if (!positive_finite(gravity)) throw InvalidNetworkError("fluid.gravity must be > 0");
}

void PipeSegment::validate() const {
    if (!positive_finite(length)) throw InvalidNetworkError("length must be > 0");
    if (!positive_finite(diameter)) throw InvalidNetworkError("diameter must be > 0");
    if (!positive_finite(wall_thickness)) throw InvalidNetworkError("wall_thickness must be > 0");
    if (!positive_finite(youngs_modulus)) throw InvalidNetworkError("youngs_modulus must be > 0");
    if (!std::isfinite(friction_factor) || friction_factor < 0.0)
        throw InvalidNetworkError("friction_factor must be >= 0");
    if (!std::isfinite(anchoring_coefficient)) throw InvalidNetworkError("anchoring_coefficient must be finite");
    if (wall_thickness >= diameter / 2.0) throw InvalidNetworkError("wall_thickness must be < diameter/2");
}

void PipelineNetwork::validate() const {
    fluid.validate();
    if (nodes.size() < 3) throw InvalidNetworkError("network needs at least 3 nodes");
    if (pipes.size() + 1 != nodes.size())
        throw InvalidNetworkError("pipes.count must equal nodes.count - 1");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.id != i) throw InvalidNetworkError("node ids must be contiguous from 0");
        if (!std::isfinite(n.elevation)) throw InvalidNetworkError("node elevation must be finite");
        const bool first = i == 0;
        const bool last = i + 1 == nodes.size();
        if (first && n.kind != NodeKind::supply_reservoir)
            throw InvalidNetworkError("node 0 must be the supply reservoir");
        if (last && n.kind != NodeKind::valve_to_reservoir && n.kind != NodeKind::dead_end)
            throw InvalidNetworkError("last node must be a valve or a dead end");
        if (!first && !last && n.kind != NodeKind::interior)
            throw InvalidNetworkError("node " + std::to_string(i) + " must be interior");
    }
    if (!positive_finite(yield_stress)) throw InvalidNetworkError("yield_stress must be > 0");
    if (!std::isfinite(upstream_head)) throw InvalidNetworkError("upstream_head must be finite");
    if (!std::isfinite(entrance_loss) || entrance_loss < -1.0)
        throw InvalidNetworkError("entrance_loss must be >= -1");
    if (has_valve()) {
        if (!downstream_head || !std::isfinite(*downstream_head))
            throw InvalidNetworkError("downstream_head is required for a valve terminal");
        if (!positive_finite(valve_discharge_coefficient))
            throw InvalidNetworkError("valve_discharge_coefficient must be > 0");
    }

    for (std::size_t i = 0; i < pipes.size(); ++i) {
        try {
            pipes[i].validate();
            wave_speed(fluid, pipes[i]);
        } catch (const std::invalid_argument& e) {
            throw InvalidNetworkError(pipe_label(i) + ": " + e.what());
        }
    }

    // Fixed-grid MOC: every pipe must share one time step and one admittance.
    const double dt0 = pipes[0].length / wave_speed(fluid, pipes[0]);
    const double ca0 = admittance(fluid, pipes[0]);
    for (std::size_t i = 1; i < pipes.size(); ++i) {
        const double dt = pipes[i].length / wave_speed(fluid, pipes[i]);
        if (std::abs(dt - dt0) > 1e-9 * dt0)
            throw InvalidNetworkError(pipe_label(i) + ": L/a differs from pipe 0 (Courant number must be 1)");
        if (std::abs(admittance(fluid, pipes[i]) - ca0) > 1e-9 * ca0)
            throw InvalidNetworkError(pipe_label(i) + ": gA/a differs from pipe 0");
    }
}

SolverState SolverState::zeros(std::size_t node_count) {
    const auto n = static_cast<Eigen::Index>(node_count);
    SolverState s;
    s.head = Eigen::VectorXd::Zero(n);
    s.flow_up = Eigen::VectorXd::Zero(n - 1);
    s.flow_down = Eigen::VectorXd::Zero(n - 1);
    s.leak_rate = Eigen::VectorXd::Zero(n);
    return s;
}

double wave_speed(const Fluid& fluid, const PipeSegment& pipe) {
    const double denom = 1.0 + (fluid.bulk_modulus / pipe.youngs_modulus) *
                                   (pipe.diameter / pipe.wall_thickness) * pipe.anchoring_coefficient;
    if (!(denom > 0.0)) throw InvalidMaterialError("wave speed denominator must be positive");
    const double a = std::sqrt((fluid.bulk_modulus / fluid.density) / denom);
    if (!std::isfinite(a) || a <= 0.0) throw InvalidMaterialError("wave speed is not finite");
    return a;
}

double admittance(const Fluid& fluid, const PipeSegment& pipe) {
    return fluid.gravity * pipe.area() / wave_speed(fluid, pipe);
}

double courant_time_step(const PipelineNetwork& network) {
    return network.pipes.front().length / wave_speed(network.fluid, network.pipes.front());
}

SteadyFlow steady_flow(const PipelineNetwork& network) {
    if (!network.has_valve()) return {};

    const double g = network.fluid.gravity;
    const double available = network.upstream_head - *network.downstream_head;
    if (!(available > 0.0))
        throw InfeasibleScenarioError("upstream head must exceed downstream head for forward steady flow");

    // Head loss per unit Q^2, summed over entrance, friction and valve.
    const double a0 = network.pipes.front().area();
    double loss_per_q2 = (1.0 + network.entrance_loss) / (2.0 * g * a0 * a0);
    for (const auto& p : network.pipes)
        loss_per_q2 += p.friction_factor * p.length / p.diameter / (2.0 * g * p.area() * p.area());
    const double valve_area = network.valve_discharge_coefficient * network.pipes.back().area();
    loss_per_q2 += 1.0 / (2.0 * g * valve_area * valve_area);

    auto residual = [&](double v) {
        const double q = v * a0;
        return available - loss_per_q2 * q * q;
    };

    double lo = 0.0;
    double hi = 20.0;
    if (residual(hi) > 0.0 || !(loss_per_q2 > 0.0))
        throw InfeasibleScenarioError("no steady velocity in (0, 20] m/s satisfies the energy balance");

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double r = residual(mid);
        if (std::abs(r) < 1e-12) break;
        (r > 0.0 ? lo : hi) = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return {mid * a0, mid, residual(mid)};
}

SolverState steady_state(const PipelineNetwork& network) {
    network.validate();
    const std::size_t n = network.node_count();
    SolverState s = SolverState::zeros(n);

    if (!network.has_valve()) {
        s.head.setConstant(network.upstream_head);
        return s;
    }

    const double g = network.fluid.gravity;
    const double q = steady_flow(network).flow;
    const double a0 = network.pipes.front().area();
    s.head[0] = network.upstream_head - (1.0 + network.entrance_loss) * q * q / (2.0 * g * a0 * a0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& p = network.pipes[i];
        const double loss = p.friction_factor * p.length * q * std::abs(q) /
                            (2.0 * g * p.diameter * p.area() * p.area());
        const auto k = static_cast<Eigen::Index>(i);
        s.head[k + 1] = s.head[k] - loss;
        s.flow_up[k] = q;
        s.flow_down[k] = q;
    }
    return s;
}

const PipeSegment& stress_pipe(const PipelineNetwork& network, std::size_t node) {
    return network.pipes[node == 0 ? 0 : node - 1];
}

}  // namespace surge
