#include "surge/ekf.hpp"

#include <string>

namespace surge::ekf {

StateLayout::StateLayout(std::size_t node_count) : nodes_(node_count) {
    if (node_count < 3) throw DimensionMismatchError("filter layout needs at least 3 nodes");
}

Eigen::VectorXd pack(const SolverState& state) {
    const StateLayout layout(state.node_count());
    const std::size_t n = layout.node_count();
    if (state.flow_up.size() + 1 != state.head.size() || state.flow_down.size() + 1 != state.head.size() ||
        state.leak_rate.size() != state.head.size())
        throw DimensionMismatchError("solver state vectors have inconsistent sizes");

    Eigen::VectorXd x(layout.size());
    x.head(static_cast<Eigen::Index>(n)) = state.head;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        x[layout.flow_up(i)] = state.flow_up[k];
        x[layout.flow_down(i)] = state.flow_down[k];
    }
    x.segment(layout.leak_block_start(), layout.leak_count()) = state.leak_rate.segment(1, layout.leak_count());
    return x;
}

SolverState unpack(const Eigen::VectorXd& x, const PipelineNetwork& network, double time) {
    const StateLayout layout(network.node_count());
    if (x.size() != layout.size())
        throw DimensionMismatchError("state vector has size " + std::to_string(x.size()) + ", expected " +
                                     std::to_string(layout.size()));
    const std::size_t n = layout.node_count();
    SolverState s = SolverState::zeros(n);
    s.time = time;
    s.head = x.head(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        s.flow_up[k] = x[layout.flow_up(i)];
        s.flow_down[k] = x[layout.flow_down(i)];
    }
    s.leak_rate.segment(1, layout.leak_count()) = x.segment(layout.leak_block_start(), layout.leak_count());
    return s;
}

NoiseConfig NoiseConfig::block_diagonal(const StateLayout& layout, double head_variance, double flow_variance,
                                        double leak_variance, double measurement_variance) {
    const auto n = static_cast<Eigen::Index>(layout.node_count());
    Eigen::VectorXd diag(layout.size());
    diag.head(n).setConstant(head_variance);
    diag.segment(layout.flow_block_start(), 2 * (n - 1)).setConstant(flow_variance);
    diag.tail(layout.leak_count()).setConstant(leak_variance);
    return {measurement_variance * Eigen::Matrix2d::Identity(), diag.asDiagonal()};
}

Eigen::MatrixXd measurement_matrix(const StateLayout& layout) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, layout.size());
    H(0, layout.head(0)) = 1.0;
    H(1, layout.head(layout.node_count() - 1)) = 1.0;
    return H;
}

Eigen::VectorXd process_model(const Eigen::VectorXd& x, const Inputs& u, const PipelineNetwork& network, double dt) {
    const SolverState s = unpack(x, network);
    std::vector<double> leaks(s.leak_rate.data(), s.leak_rate.data() + s.leak_rate.size());
    Eigen::VectorXd next =
        pack(advance_prescribed(s, network, u, leaks, dt, ReverseFlowPolicy::sign_aware));
    return next;
}

EkfState predict(const EkfState& ekf, const Inputs& u, const NoiseConfig& noise, const PipelineNetwork& network,
                 double dt) {
    auto f = [&](const Eigen::VectorXd& x) { return process_model(x, u, network, dt); };
    const Eigen::MatrixXd J = jacobian(f, ekf.x);
    EkfState out;
    out.x = f(ekf.x);
    out.P = J * ekf.P * J.transpose() + noise.process;
    out.P = 0.5 * (out.P + out.P.transpose()).eval();
    return out;
}

EkfState kalman_update(const EkfState& prior, const Eigen::VectorXd& z, const Eigen::MatrixXd& H,
                       const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd S = H * prior.P * H.transpose() + R;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
        throw NumericalError("innovation covariance is not positive definite");
    // K = P H' S^-1, computed as (S^-1 H P)'
    const Eigen::MatrixXd K = ldlt.solve(H * prior.P).transpose();

    EkfState post;
    post.x = prior.x + K * (z - H * prior.x);
    const auto M = prior.x.size();
    post.P = (Eigen::MatrixXd::Identity(M, M) - K * H) * prior.P;
    post.P = 0.5 * (post.P + post.P.transpose()).eval();
    return post;
}

Eigen::MatrixXd joseph_covariance(const Eigen::MatrixXd& prior_P, const Eigen::MatrixXd& H,
                                  const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd S = H * prior_P * H.transpose() + R;
    const Eigen::MatrixXd K = S.ldlt().solve(H * prior_P).transpose();
    const auto M = prior_P.rows();
    const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(M, M) - K * H;
    return IKH * prior_P * IKH.transpose() + K * R * K.transpose();
}

EkfState update(const EkfState& prior, const Measurement& z, const NoiseConfig& noise, const StateLayout& layout) {
    EkfState post = kalman_update(prior, z, measurement_matrix(layout), noise.measurement);
    auto leaks = post.x.segment(layout.leak_block_start(), layout.leak_count());
    leaks = leaks.cwiseMax(0.0);
    return post;
}

FilterInit FilterInit::from_steady_state(const PipelineNetwork& network, double variance) {
    const SolverState steady = steady_state(network);
    const StateLayout layout(network.node_count());
    return {pack(steady), variance * Eigen::MatrixXd::Identity(layout.size(), layout.size())};
}

std::vector<FilterStep> run_filter(const std::vector<Measurement>& measurements, const std::vector<Inputs>& inputs,
                                   const FilterInit& init, const NoiseConfig& noise, const PipelineNetwork& network,
                                   double dt) {
    if (measurements.size() != inputs.size())
        throw DimensionMismatchError("measurement and input series must have the same length");
    const StateLayout layout(network.node_count());
    if (init.x.size() != layout.size() || init.P.rows() != layout.size() || init.P.cols() != layout.size())
        throw DimensionMismatchError("initial estimate does not match the network");

    std::vector<FilterStep> out;
    out.reserve(measurements.size());
    EkfState ekf{init.x, init.P};
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        if (k > 0) ekf = predict(ekf, inputs[k], noise, network, dt);
        FilterStep rec;
        rec.prior = ekf.x;
        ekf = update(ekf, measurements[k], noise, layout);
        rec.posterior = ekf.x;
        rec.variance = ekf.P.diagonal();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace surge::ekf
