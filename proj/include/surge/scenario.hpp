#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surge/burst.hpp"
#include "surge/ekf.hpp"
#include "surge/hydraulics.hpp"
#include "surge/moc.hpp"

namespace surge {

inline constexpr std::string_view kVersion = "0.1.0";

struct ForcedBurst {
    std::size_t node = 0;  // 0-based node index
    std::size_t step = 0;  // burst is registered after this step
    bool operator==(const ForcedBurst&) const = default;
};

struct FilterSettings {
    double initial_variance = 0.1;
    double head_variance = 0.1;
    double flow_variance = 0.01;
    double leak_variance = 5e-5;
    double measurement_variance = 0.001;
};

struct OutputPaths {
    std::string timeseries;
    std::string bursts;
    std::string manifest;
    std::string measurements;
    std::string estimates;
};

/// Everything needed to reproduce one run.
struct ScenarioConfig {
    std::string name = "custom";
    PipelineNetwork network;
    std::optional<ValveSchedule> valve;  // required iff the terminal is a valve
    BurstModelConfig burst;
    double duration = 100.0;              // s; ignored when steps is set
    std::optional<std::size_t> steps;
    std::vector<ForcedBurst> forced_bursts;
    double noise_variance = 0.04;         // m^2
    std::uint64_t noise_seed = 7;
    FilterSettings filter;
    OutputPaths output;

    TimeGrid grid() const;
    const ValveSchedule* schedule() const { return valve ? &*valve : nullptr; }
    /// Full semantic validation; throws ScenarioError naming the field.
    void validate() const;
};

/// Parses the sectioned key = value format (see README). Unknown sections
/// or keys, duplicate keys and malformed values are rejected with the line
/// number; semantic violations name the offending field.
ScenarioConfig parse_scenario(std::string_view text);

/// Canonical text form; parse_scenario(to_text(c)) reproduces c exactly.
std::string to_text(const ScenarioConfig& config);

std::vector<std::string> preset_names();
std::optional<ScenarioConfig> find_preset(std::string_view name);

/// A preset name or a path to a scenario/manifest file.
ScenarioConfig load_scenario(const std::string& name_or_path);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

// -------------------------------------------------------------
// Runs
// -------------------------------------------------------------

struct RunArtifacts {
    std::vector<SolverState> states;           // steps + 1 rows, states[0] is steady
    std::vector<BoundaryInputs> inputs;        // inputs[k] in force at time k dt
    std::vector<BurstEvent> bursts;
    BurstRegistry registry;
    double dt = 0.0;
    double wave_speed = 0.0;
};

/// Truth simulation: steady start, MOC march, forced bursts, then the burst
/// model after every step.
RunArtifacts simulate(const ScenarioConfig& config, const ProbabilityLaw& law = {});

/// Boundary inputs at every grid time, as the filter sees them.
std::vector<BoundaryInputs> schedule_inputs(const ScenarioConfig& config);

/// Heads at the first and last node plus N(0, variance) noise.
std::vector<ekf::Measurement> simulate_measurements(const std::vector<SolverState>& truth, double variance,
                                                    std::uint64_t seed);

std::vector<ekf::FilterStep> estimate(const ScenarioConfig& config, const std::vector<ekf::Measurement>& z);

/// Estimated states (posterior) for writing and comparison.
std::vector<SolverState> estimate_states(const std::vector<ekf::FilterStep>& steps, const PipelineNetwork& network,
                                         double dt);

// -------------------------------------------------------------
// Files
// -------------------------------------------------------------

/// Column names: time, H<n>, Q<i>_1, Q<i>_2, QL<n> (0-based indices).
std::vector<std::string> timeseries_header(std::size_t node_count);

void write_timeseries(const std::filesystem::path& path, const std::vector<SolverState>& states);
std::vector<SolverState> read_timeseries(const std::filesystem::path& path);

void write_measurements(const std::filesystem::path& path, const std::vector<ekf::Measurement>& z, double dt);
std::vector<ekf::Measurement> read_measurements(const std::filesystem::path& path);

void write_burst_log(const std::filesystem::path& path, const std::vector<BurstEvent>& events);

/// Canonical scenario text followed by a [manifest] section.
void write_manifest(const std::filesystem::path& path, const ScenarioConfig& config, const RunArtifacts& run);

/// Shortest-exact 17 significant digit form used by every writer.
std::string format_number(double v);

// -------------------------------------------------------------
// Summaries
// -------------------------------------------------------------

/// Mean over the last quarter of the rows (rows [n - n/4, n)).
double final_quarter_mean(const std::vector<double>& series);

struct LeakComparison {
    std::size_t node = 0;
    double truth = 0.0;
    double estimate = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;  // relative to truth; NaN when truth is zero
};

struct ComparisonSummary {
    std::vector<LeakComparison> leaks;  // one per interior node
    double head_rmse_upstream = 0.0;
    double head_rmse_downstream = 0.0;
};

ComparisonSummary compare(const std::vector<SolverState>& truth, const std::vector<SolverState>& estimates);

}  // namespace surge
