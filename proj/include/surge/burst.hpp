#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "surge/hydraulics.hpp"

namespace surge {

enum class BurstMode { none, deterministic, probabilistic };

struct BurstModelConfig {
    BurstMode mode = BurstMode::deterministic;
    double threshold_fraction = 0.8;  // of yield stress
    double default_lambda = 0.001;    // A_leak sqrt(2g), m^2.5/s
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Per-node burst status. A burst is permanent and keeps the leak
/// coefficient it was given.
class BurstRegistry {
public:
    BurstRegistry() = default;
    explicit BurstRegistry(std::size_t node_count) : entries_(node_count) {}

    std::size_t node_count() const { return entries_.size(); }
    bool is_burst(std::size_t node) const { return entries_.at(node).step.has_value(); }
    std::optional<std::size_t> burst_step(std::size_t node) const { return entries_.at(node).step; }
    double lambda(std::size_t node) const { return entries_.at(node).lambda; }

    /// Marks an intact interior node as burst. Re-marking is a no-op so the
    /// original burst step is kept.
    void mark_burst(std::size_t node, std::size_t step, double lambda);

    /// Leak coefficient per node, zero for intact nodes.
    std::vector<double> lambdas() const;
    std::vector<std::size_t> burst_nodes() const;

    bool operator==(const BurstRegistry&) const = default;

private:
    struct Entry {
        std::optional<std::size_t> step;
        double lambda = 0.0;
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries_;
};

enum class BurstCause { stress, forced };

struct BurstEvent {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t node = 0;
    double stress = 0.0;       // Pa
    double probability = 0.0;
    std::optional<double> draw; // uniform draw, probabilistic mode only
    BurstCause cause = BurstCause::stress;

    bool operator==(const BurstEvent&) const = default;
};

/// Uniform [0,1) stream with a fixed draw order; 53-bit mantissa from
/// mt19937_64 so results do not depend on the standard library.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

/// Piecewise-linear failure probability: 0 below threshold_fraction * ys,
/// 1 above ys, linear ramp between.
inline double burst_probability(double hoop, double yield, double threshold_fraction = 0.8) {
    const double lo = threshold_fraction * yield;
    if (hoop < lo) return 0.0;
    if (hoop > yield) return 1.0;
    return (hoop - lo) / (yield - lo);
}

using ProbabilityLaw = std::function<double(double hoop, double yield)>;

/// Checks every intact interior node against the burst criterion using the
/// heads in `state`, marks new bursts in `registry` and returns them.
///
/// Deterministic mode bursts a node iff its probability is positive.
/// Probabilistic mode draws one uniform per intact interior node, in
/// ascending node order, and bursts iff the draw is below the probability.
/// `law` overrides burst_probability (used to pin p = 1 in tests).
std::vector<BurstEvent> evaluate_bursts(const SolverState& state, const PipelineNetwork& network,
                                        const BurstModelConfig& config, BurstRegistry& registry,
                                        UniformStream& stream, std::size_t step, const ProbabilityLaw& law = {});

}  // namespace surge
