#pragma once

#include "guidesim/engine.hpp"
#include "guidesim/kernels.hpp"
#include "guidesim/network.hpp"
#include "guidesim/scenario.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace guidesim {

/// Runs fn(0..n-1) on up to `jobs` threads; results are written by index, so
/// output order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Per-seed run of `base` under kernel `k`.
struct SeedOutcome {
    double att = 0.0;
    double oscillation = 0.0;
};

/// Mean ATT and oscillation of `k` on `base` averaged over `seeds`.
struct SeedAverage {
    double mean_att = 0.0;
    double std_att = 0.0;
    double mean_oscillation = 0.0;
    std::vector<SeedOutcome> per_seed;
};

SeedAverage evaluate_kernel(const ScenarioConfig& base, const Network& net, const KernelSpec& k,
                            const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

/// Scale parameters that match_integral may solve for.
bool is_scale_parameter(std::string_view name);

/**
 * Completes a family's spec so its total influence on `dom` matches `target`.
 * Exactly one scale parameter (dt, ct, cx, x_radius) of the family must be
 * absent from `fixed`; bases default to e. Solved by bisection to a relative
 * error below 0.5%. Throws ValidationError when the target lies outside what
 * the parameter's bracket can reach.
 */
KernelSpec match_integral(KernelFamily family, const std::map<std::string, double>& fixed, double target,
                          const Domain2D& dom);

struct EquivalenceReport {
    double integral_1 = 0.0;
    double integral_2 = 0.0;
    double integral_rel_diff = 0.0; ///< |I1 - I2| / max(I1, I2)
    double eta_1 = 0.0;
    double eta_2 = 0.0;
    double eta_rel_diff = 0.0; ///< signed (eta_1 - eta_2) / mean(eta_1, eta_2)
    double phase_distance = 0.0;
    double oscillation_1 = 0.0;
    double oscillation_2 = 0.0;
    std::size_t seeds_used = 0;
};

/// Runs `base` under both kernels for every seed and reports the influence,
/// performance and phase-distance triple. Spatially divergent kernels are
/// rejected unless `allow_divergent` is set.
EquivalenceReport equivalence_trial(const ScenarioConfig& base, const Network& net, const KernelSpec& k1,
                                    const KernelSpec& k2, const std::vector<std::uint64_t>& seeds,
                                    const Domain2D& dom, bool allow_divergent = false, std::size_t jobs = 1);

struct GridAxisSpec {
    std::string name;
    std::vector<double> values;
};

struct SweepRow {
    std::vector<double> params; ///< in grid-axis order
    double mean_att = 0.0;
    double std_att = 0.0;
    double mean_oscillation = 0.0;
    std::string error; ///< non-empty when the grid point failed
};

struct SweepTable {
    std::vector<std::string> names;
    std::vector<SweepRow> rows; ///< ascending mean_att; failed rows last
};

/// Cartesian grid over the named parameters of `family`. Parameters not on
/// the grid come from the base scenario's kernel when it is the same family.
SweepTable sweep(const ScenarioConfig& base, const Network& net, KernelFamily family,
                 const std::vector<GridAxisSpec>& grid, const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

struct ParameterBound {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
};

struct TraceEntry {
    std::vector<double> params;
    double eta = 0.0;
};

struct OptimizationResult {
    KernelFamily family = KernelFamily::Zero;
    std::vector<std::string> names;
    std::vector<double> best_params;
    double best_eta = 0.0;
    std::size_t evaluations = 0;
    std::vector<TraceEntry> trace;
};

struct OptimizeOptions {
    /// Size of the initial low-discrepancy lattice; 0 means ceil(budget / 2).
    std::size_t grid_points = 0;
    std::size_t jobs = 1;
};

/**
 * Derivative-free search over a kernel family's parameters: a Halton lattice
 * over the box, then Nelder-Mead from the best lattice point, for at most
 * `budget` simulation evaluations. The objective is mean ATT over seeds, plus
 * 10 * ATT when the kernel has unbounded spatial influence. Candidate points
 * are clamped into the box.
 */
OptimizationResult optimize(const ScenarioConfig& base, const Network& net, KernelFamily family,
                            const std::vector<ParameterBound>& bounds, std::size_t budget,
                            const std::vector<std::uint64_t>& seeds, const OptimizeOptions& options = {});

std::string sweep_csv(const SweepTable& table);
std::string optimize_csv(const OptimizationResult& result);
std::string equivalence_csv(const EquivalenceReport& report);

} // namespace guidesim
