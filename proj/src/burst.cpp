#include "surge/burst.hpp"

#include <cmath>
#include <stdexcept>

namespace surge {

void BurstModelConfig::validate() const {
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
        throw std::invalid_argument("burst.threshold_fraction must lie in (0, 1)");
    if (!(default_lambda > 0.0) || !std::isfinite(default_lambda))
        throw std::invalid_argument("burst.lambda must be > 0");
}

void BurstRegistry::mark_burst(std::size_t node, std::size_t step, double lambda) {
    if (node == 0 || node + 1 >= entries_.size())
        throw std::out_of_range("only interior nodes can burst");
    if (!(lambda > 0.0)) throw std::invalid_argument("burst lambda must be > 0");
    auto& e = entries_[node];
    if (e.step) return;
    e.step = step;
    e.lambda = lambda;
}

std::vector<double> BurstRegistry::lambdas() const {
    std::vector<double> out(entries_.size(), 0.0);
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].step) out[i] = entries_[i].lambda;
    return out;
}

std::vector<std::size_t> BurstRegistry::burst_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].step) out.push_back(i);
    return out;
}

std::vector<BurstEvent> evaluate_bursts(const SolverState& state, const PipelineNetwork& network,
                                        const BurstModelConfig& config, BurstRegistry& registry,
                                        UniformStream& stream, std::size_t step, const ProbabilityLaw& law) {
    std::vector<BurstEvent> events;
    if (config.mode == BurstMode::none) return events;

    const std::size_t n = network.node_count();
    for (std::size_t node = 1; node + 1 < n; ++node) {
        if (registry.is_burst(node)) continue;
        const double h = pressure_head(network.nodes[node], state);
        const double stress = hoop_stress(h, network.fluid, stress_pipe(network, node));
        const double p = law ? law(stress, network.yield_stress)
                             : burst_probability(stress, network.yield_stress, config.threshold_fraction);

        bool burst = false;
        std::optional<double> draw;
        if (config.mode == BurstMode::deterministic) {
            burst = p > 0.0;
        } else {
            draw = stream.next();
            burst = *draw < p;
        }
        if (!burst) continue;
        registry.mark_burst(node, step, config.default_lambda);
        events.push_back({step, state.time, node, stress, p, draw, BurstCause::stress});
    }
    return events;
}

}  // namespace surge
