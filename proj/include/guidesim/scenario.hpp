#pragma once

#include "guidesim/behavior.hpp"
#include "guidesim/kernels.hpp"
#include "guidesim/learning.hpp"
#include "guidesim/network.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guidesim {

/// When links publish their realized travel time.
struct EmissionConfig {
    /// Publish every `period` steps (period = round(1/f) for upgrading frequency f).
    std::int64_t period = 1;
    /// Publish immediately when the relative change since the last emission exceeds this.
    double change_threshold = 0.2;
};

struct ConvergenceConfig {
    std::int64_t window = 50;
    double cv_threshold = 0.05;
};

struct ScenarioConfig {
    std::string network_path;
    std::vector<DemandEntry> demand;
    KernelSpec kernel{kernel::Zero{}, std::nullopt};
    SelectionModel selection;
    double x_serv = 1.0;
    double x_user = 1.0;
    ReactionStrategy strategy = reaction::MinPerceivedCost{};
    RoutingMode mode = RoutingMode::Descriptive;
    EmissionConfig emission;
    LearningConfig learning;
    std::int64_t steps = 1000;
    std::int64_t warmup = 0;
    std::uint64_t seed = 0;
    bool pretrip_only = false;
    /// Trailing window (steps) of the instantaneous ATT column.
    std::int64_t att_window = 20;
    ConvergenceConfig convergence;
};

/// Throws ValidationError naming the offending keys.
void validate(const ScenarioConfig& cfg);

/**
 * Parses a scenario file. Sections: [scenario], [kernel], [selection],
 * [emission], [learning], [demand]. `key = value` lines, `#` comments,
 * demand rows `origin,dest,rate,guided_fraction,start,end`. Unknown keys are
 * errors. A relative `network` path is resolved against `base_dir`.
 */
ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir);
ScenarioConfig load_scenario(const std::string& path);

} // namespace guidesim
