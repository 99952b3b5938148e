#pragma once

#include "guidesim/network.hpp"
#include "guidesim/scenario.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace guidesim {

/// Performance measures of one run, over the post-warmup window.
struct Metrics {
    double att = std::numeric_limits<double>::quiet_NaN(); ///< NaN when no trip completed
    std::optional<std::int64_t> convergence_time;
    double oscillation_index = 0.0; ///< route-split direction flips per 100 steps
    std::int64_t completed = 0;
    std::int64_t failed = 0;
    std::int64_t routes_computed = 0;
};

struct TimeSeriesRow {
    std::int64_t step = 0;
    double att_window = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> route_split; ///< per OD; NaN when the OD has nobody on the network
    std::vector<int> volume;         ///< per link
    std::size_t active_items = 0;

    // Not written to timeseries.csv; feeds compute_metrics and invariant checks.
    std::int64_t completed = 0;
    double trip_time_sum = 0.0;
    std::int64_t failed = 0;
    std::int64_t routes_computed = 0;
    std::int64_t spawned_total = 0;
    std::int64_t completed_total = 0;
    std::int64_t failed_total = 0;
    std::int64_t in_flight = 0;
    std::int64_t items_emitted = 0;
};

struct TimeSeries {
    std::vector<std::string> od_labels; ///< "origin_dest"
    std::vector<LinkId> link_ids;
    std::size_t dominant_od = 0;
    std::vector<TimeSeriesRow> rows;
};

struct RunResult {
    Metrics metrics;
    TimeSeries series;
    std::vector<std::string> warnings;
};

/**
 * Runs a scenario. Per step: departures from demand, routing decisions at
 * nodes, link advancement, emission of realized link times, learning, and
 * recording. Deterministic for a given config and seed.
 */
RunResult run(const ScenarioConfig& cfg);
RunResult run(const ScenarioConfig& cfg, const Network& net);

/// Post-warmup ATT, convergence time and oscillation index from a series.
Metrics compute_metrics(const TimeSeries& ts, std::int64_t warmup, const ConvergenceConfig& conv = {});

/// Oscillation index of one route-split series over rows with step >= warmup.
double oscillation_index(const std::vector<double>& split, const std::vector<std::int64_t>& steps,
                         std::int64_t warmup);

std::string metrics_csv(const Metrics& m);
std::string timeseries_csv(const TimeSeries& ts);

} // namespace guidesim
