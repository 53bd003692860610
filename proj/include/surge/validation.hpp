#pragma once

#include <string>
#include <vector>

#include "surge/scenario.hpp"

namespace surge {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct TransientMetrics {
    double peak_head = 0.0;
    double peak_time = 0.0;
    double final_quarter_head = 0.0;
};

/// Head at `node` in a run: peak, time of peak, last-quarter mean.
TransientMetrics transient_metrics(const RunArtifacts& run, std::size_t node);

/// Mean final-quarter EKF leak estimate per interior node, averaged over
/// the given noise seeds. Index i holds node i + 1.
std::vector<double> mean_leak_estimates(const ScenarioConfig& config, const RunArtifacts& truth,
                                        const std::vector<std::uint64_t>& seeds);

CriterionResult check_wave_speed();
CriterionResult check_no_burst_transient();
CriterionResult check_burst_localization();
CriterionResult check_leak_asymptote();
CriterionResult check_filter_estimates(std::size_t seed_count = 5);

/// Criteria 1 to 5, all on the built-in presets.
std::vector<CriterionResult> validate_presets();

std::string format_result(const CriterionResult& r);

}  // namespace surge
