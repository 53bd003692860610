#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "surge/hydraulics.hpp"
#include "surge/moc.hpp"

namespace surge::ekf {

/// Index map of the filter state
///   [H_0 .. H_{N-1}, Q_{0,1}, Q_{0,2}, ..., Q_{N-2,1}, Q_{N-2,2}, QL_1 .. QL_{N-2}]
/// of dimension 4N - 4.
class StateLayout {
public:
    explicit StateLayout(std::size_t node_count);

    std::size_t node_count() const { return nodes_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(4 * nodes_ - 4); }

    Eigen::Index head(std::size_t node) const { return static_cast<Eigen::Index>(node); }
    Eigen::Index flow_up(std::size_t pipe) const { return static_cast<Eigen::Index>(nodes_ + 2 * pipe); }
    Eigen::Index flow_down(std::size_t pipe) const { return static_cast<Eigen::Index>(nodes_ + 2 * pipe + 1); }
    /// Interior nodes only, 1 <= node <= N-2.
    Eigen::Index leak(std::size_t node) const { return static_cast<Eigen::Index>(3 * nodes_ - 2 + node - 1); }

    Eigen::Index flow_block_start() const { return static_cast<Eigen::Index>(nodes_); }
    Eigen::Index leak_block_start() const { return static_cast<Eigen::Index>(3 * nodes_ - 2); }
    Eigen::Index leak_count() const { return static_cast<Eigen::Index>(nodes_ - 2); }

private:
    std::size_t nodes_;
};

using Inputs = BoundaryInputs;
using Measurement = Eigen::Vector2d;

Eigen::VectorXd pack(const SolverState& state);
SolverState unpack(const Eigen::VectorXd& x, const PipelineNetwork& network, double time = 0.0);

struct NoiseConfig {
    Eigen::Matrix2d measurement;  // R
    Eigen::MatrixXd process;      // Q

    /// Block-diagonal Q with one variance per block (heads, flows, leaks)
    /// and R = measurement_variance * I.
    static NoiseConfig block_diagonal(const StateLayout& layout, double head_variance, double flow_variance,
                                      double leak_variance, double measurement_variance);
    /// R = 0.001 I, Q = blkdiag(0.1 I, 0.01 I, 5e-5 I).
    static NoiseConfig standard(const StateLayout& layout) {
        return block_diagonal(layout, 0.1, 0.01, 5e-5, 0.001);
    }
};

struct EkfState {
    Eigen::VectorXd x;
    Eigen::MatrixXd P;
};

/// 2 x M selector of the heads at the first and last node.
Eigen::MatrixXd measurement_matrix(const StateLayout& layout);

/// One MOC step of the estimate: every interior node leaks the rate held in
/// its leak state, and leak states carry over unchanged.
Eigen::VectorXd process_model(const Eigen::VectorXd& x, const Inputs& u, const PipelineNetwork& network, double dt);

/// Forward-difference Jacobian of f at x, step max(1e-7, 1e-7 |x_j|).
template <typename F>
Eigen::MatrixXd jacobian(F&& f, const Eigen::VectorXd& x) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd J(f0.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = std::max(1e-7, 1e-7 * std::abs(x[j]));
        xp[j] = x[j] + h;
        J.col(j) = (f(xp) - f0) / (xp[j] - x[j]);
        xp[j] = x[j];
    }
    if (!J.allFinite()) throw LinearizationError("Jacobian has non-finite entries");
    return J;
}

/// x- = f(x, u); P- = J P J' + Q, symmetrised.
EkfState predict(const EkfState& ekf, const Inputs& u, const NoiseConfig& noise, const PipelineNetwork& network,
                 double dt);

/// Standard (I - KH) P update with the leak block clamped at zero.
EkfState update(const EkfState& prior, const Measurement& z, const NoiseConfig& noise, const StateLayout& layout);

/// Generic measurement update for any linear observation; used by update()
/// and directly by small closed-form tests.
EkfState kalman_update(const EkfState& prior, const Eigen::VectorXd& z, const Eigen::MatrixXd& H,
                       const Eigen::MatrixXd& R);

/// Joseph-form covariance (I-KH) P (I-KH)' + K R K' for the same gain.
Eigen::MatrixXd joseph_covariance(const Eigen::MatrixXd& prior_P, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R);

struct FilterInit {
    Eigen::VectorXd x;
    Eigen::MatrixXd P;

    /// No-leak steady state with P0 = variance * I.
    static FilterInit from_steady_state(const PipelineNetwork& network, double variance = 0.1);
};

struct FilterStep {
    Eigen::VectorXd prior;     // x- (equals init at step 0)
    Eigen::VectorXd posterior; // x after the measurement update
    Eigen::VectorXd variance;  // diag(P) after the update
};

/// Alternating predict/update over aligned series. measurements[k] and
/// inputs[k] belong to time k dt; step 0 is update-only.
std::vector<FilterStep> run_filter(const std::vector<Measurement>& measurements, const std::vector<Inputs>& inputs,
                                   const FilterInit& init, const NoiseConfig& noise, const PipelineNetwork& network,
                                   double dt);

}  // namespace surge::ekf
