#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "surge/error.hpp"

namespace surge {

// -------------------------------------------------------------
// Physical description
// -------------------------------------------------------------

struct Fluid {
    double density = 1000.0;        // kg/m^3
    double bulk_modulus = 2.1994e9; // Pa
    double gravity = 9.8;           // m/s^2

    void validate() const;
};

struct PipeSegment {
    double length = 0.0;         // m
    double diameter = 0.0;       // m
    double wall_thickness = 0.0; // m
    double friction_factor = 0.0;
    double youngs_modulus = 0.0; // Pa
    double anchoring_coefficient = 1.0;

    double area() const { return std::numbers::pi * diameter * diameter / 4.0; }
    void validate() const;
};

enum class NodeKind { supply_reservoir, interior, valve_to_reservoir, dead_end };

struct NetworkNode {
    std::size_t id = 0;
    double elevation = 0.0; // m
    NodeKind kind = NodeKind::interior;
};

/// Serial pipeline: pipe i joins node i to node i+1. Node 0 is the supply
/// reservoir, node N-1 is either a valve discharging to a reservoir or a
/// closed end.
struct PipelineNetwork {
    Fluid fluid;
    std::vector<NetworkNode> nodes;
    std::vector<PipeSegment> pipes;
    double yield_stress = 8e6;            // Pa
    double upstream_head = 40.0;          // H_R1, m
    std::optional<double> downstream_head; // H_R2, m; absent for a dead end
    double entrance_loss = 0.5;           // eta
    double valve_discharge_coefficient = 0.6; // Cd0 of the fully open valve

    std::size_t node_count() const { return nodes.size(); }
    std::size_t pipe_count() const { return pipes.size(); }
    bool has_valve() const { return !nodes.empty() && nodes.back().kind == NodeKind::valve_to_reservoir; }

    /// Throws InvalidNetworkError (or InvalidMaterialError) on the first
    /// violated invariant, including a non-uniform Courant grid.
    void validate() const;
};

/// Heads at all nodes and flows at both ends of every pipe at one instant.
struct SolverState {
    double time = 0.0;
    Eigen::VectorXd head;      // H per node
    Eigen::VectorXd flow_up;   // Q_{i1}, upstream end of pipe i
    Eigen::VectorXd flow_down; // Q_{i2}, downstream end of pipe i
    Eigen::VectorXd leak_rate; // Q_L per node, zero at boundaries

    static SolverState zeros(std::size_t node_count);
    std::size_t node_count() const { return static_cast<std::size_t>(head.size()); }
};

// -------------------------------------------------------------
// Operations
// -------------------------------------------------------------

/// Pressure-wave celerity in an elastic pipe, m/s.
double wave_speed(const Fluid& fluid, const PipeSegment& pipe);

/// Admittance gA/a of a pipe, m^2/s.
double admittance(const Fluid& fluid, const PipeSegment& pipe);

/// Common MOC time step L/a. Requires validate() to have passed.
double courant_time_step(const PipelineNetwork& network);

struct SteadyFlow {
    double flow = 0.0;     // Q0, m^3/s
    double velocity = 0.0; // mean velocity in the first pipe, m/s
    double residual = 0.0; // energy-balance residual at Q0, m
};

/// Root of the valve-case energy balance
///   H_R1 - H_R2 = (1+eta) V0^2/2g + sum f L/D V^2/2g + (Q/(Cd0 A_v))^2/2g
/// found by bisection on the first-pipe velocity over (0, 20] m/s.
SteadyFlow steady_flow(const PipelineNetwork& network);

/// Initial condition: fully open valve (friction gradient, uniform flow) or
/// stagnant hydrostatic column for a dead end.
SolverState steady_state(const PipelineNetwork& network);

inline double pressure_head(const NetworkNode& node, const SolverState& state) {
    return state.head[static_cast<Eigen::Index>(node.id)] - node.elevation;
}

/// Thin-wall circumferential stress rho g h D / (2 e), Pa.
inline double hoop_stress(double pressure_head, const Fluid& fluid, const PipeSegment& pipe) {
    return fluid.density * fluid.gravity * pressure_head * pipe.diameter / (2.0 * pipe.wall_thickness);
}

/// Pipe used to evaluate wall stress at a node: the pipe entering it, or the
/// first pipe for node 0.
const PipeSegment& stress_pipe(const PipelineNetwork& network, std::size_t node);

}  // namespace surge
