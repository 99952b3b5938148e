// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "guidesim/cli.hpp"
#include "guidesim/csv.hpp"
#include "guidesim/engine.hpp"
#include "guidesim/experiments.hpp"
#include "guidesim/learning.hpp"
#include "guidesim/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <string>

#include <fmt/format.h>

using namespace guidesim;
namespace fs = std::filesystem;

namespace {

const std::string kData = GUIDESIM_DATA_DIR;
const std::string kStandard = kData + "/two_route.cfg";
const std::string kHunting = kData + "/hunting.cfg";
constexpr double e = std::numbers::e;

// Tolerances and limits, pinned.
constexpr double kExact = 1e-12;
constexpr double kNstIntegralTol = 0.01;
constexpr double kBoxIntegralTol = 0.005;
constexpr double kMatchTol = 0.005;
constexpr double kHuntingFloor = 20.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& ex) {
        o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > limit_s) {
        o.pass = false;
        o.detail += fmt::format("; over time limit {:.0f} s", limit_s);
    }
    failures += o.pass ? 0 : 1;
    std::cout << fmt::format("{} {} ({:.2f} s): {}", o.pass ? "PASS" : "FAIL", name, secs, o.detail) << std::endl;
}

std::vector<std::uint64_t> seeds(std::uint64_t n) {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 1; i <= n; ++i) s.push_back(i);
    return s;
}

KernelSpec k(KernelShape shape) { return {shape, std::nullopt}; }

Outcome learning_rule() {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> cost(0.0, 500.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double old_cost = cost(gen);
        const double new_cost = cost(gen);
        const double p = unit(gen);
        PerceivedCosts c({old_cost});
        c.apply_update(0, new_cost, p);
        const double expected = old_cost + p * (new_cost - old_cost);
        worst = std::max(worst, std::abs(c.at(0) - expected) / std::max(1.0, std::abs(expected)));
    }
    bool edges = true;
    for (int i = 0; i < 100; ++i) {
        const double old_cost = cost(gen);
        const double new_cost = cost(gen);
        PerceivedCosts keep({old_cost});
        keep.apply_update(0, new_cost, 0.0);
        PerceivedCosts replace({old_cost});
        replace.apply_update(0, new_cost, 1.0);
        edges = edges && keep.at(0) == old_cost && replace.at(0) == new_cost;
    }
    return {worst < kExact && edges,
            fmt::format("max relative error {:.2e} over 1000 triples; p=0/p=1 exact: {}", worst, edges)};
}

Outcome kernel_values() {
    struct Case {
        KernelSpec kernel;
        double x, t, expected;
    };
    const std::vector<Case> cases{
        {k(kernel::Zero{}), 3.0, 4.0, 0.0},
        {k(kernel::GlobalGap{10.0}), 500.0, 3.0, 1.0},
        {k(kernel::GlobalGap{10.0}), 500.0, 10.0, 0.0},
        {k(kernel::NaturalGlobal{e, 20.0}), 77.0, 20.0, std::exp(-1.0)},
        {k(kernel::NaturalSpaceTime{e, 2.0, e, 3.0}), 2.0, 3.0, std::exp(-2.0)},
        {{kernel::NaturalGlobal{e, 10.0}, 1.0}, 50.0, 10.0, 0.0},
        {k(kernel::LocalGap{1.0, 5.0}), 0.5, 2.0, 1.0},
        {k(kernel::LocalGap{1.0, 5.0}), 10.0, 2.0, 0.0},
        {k(kernel::NaturalLocal{4.0, 2.0, 3.0}), 4.0, 6.0, 0.25},
        {k(kernel::NaturalLocal{4.0, 2.0, 3.0}), 4.5, 0.0, 0.0},
    };
    double worst = 0.0;
    for (const auto& c : cases) worst = std::max(worst, std::abs(eval(c.kernel, c.x, c.t) - c.expected));
    for (double ct : {0.5, 1.0, 7.0, 20.0, 333.0}) {
        worst = std::max(worst, std::abs(eval(k(kernel::NaturalGlobal{e, ct}), 1.0, ct) - std::exp(-1.0)));
    }
    return {worst <= kExact, fmt::format("max abs error {:.2e} over {} points", worst, cases.size() + 5)};
}

Outcome integral_oracle() {
    const Domain2D dom{40.0, 60.0, 0.05, 0.05};
    const double nst = total_influence(k(kernel::NaturalSpaceTime{e, 2.0, e, 3.0}), dom);
    const double box = total_influence(k(kernel::LocalGap{2.0, 3.0}), dom);
    const double nst_err = std::abs(nst - 6.0) / 6.0;
    const double box_err = std::abs(box - 6.0) / 6.0;
    return {nst_err < kNstIntegralTol && box_err < kBoxIntegralTol,
            fmt::format("NaturalSpaceTime(e,2,e,3) = {:.6f} (rel {:.2e}); LocalGap(2,3) = {:.6f} (rel {:.2e})", nst,
                        nst_err, box, box_err)};
}

Outcome principle_one() {
    const Domain2D dom;
    const auto ref = k(kernel::NaturalSpaceTime{e, 2.0, e, 3.0});
    struct Case {
        KernelSpec kernel;
        Principle1 expected;
    };
    const std::vector<Case> cases{
        {k(kernel::Zero{}), Principle1::BelowReference},
        {k(kernel::GlobalGap{3.0}), Principle1::DivergesInSpace},
        {k(kernel::NaturalGlobal{e, 10.0}), Principle1::DivergesInSpace},
        {k(kernel::LocalGap{4.0, 5.0}), Principle1::Pass},
        {k(kernel::NaturalLocal{5.0, e, 5.0}), Principle1::Pass},
        {k(kernel::NaturalSpaceTime{e, 4.0, e, 5.0}), Principle1::Pass},
    };
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        const auto got = check_principles(c.kernel, ref, dom).principle1;
        ok = ok && got == c.expected;
        detail += fmt::format("{}{}={}", detail.empty() ? "" : ", ", family_name(c.kernel.family()), to_string(got));
    }
    return {ok, detail};
}

Outcome static_assignment() {
    auto cfg = load_scenario(kStandard);
    cfg.kernel = k(kernel::Zero{});
    cfg.steps = 2000;
    cfg.demand.front().end = 2000;
    const auto result = run(cfg);
    // count direction changes of the split over the whole run
    const auto& rows = result.series.rows;
    std::vector<double> split;
    std::vector<std::int64_t> steps;
    double lo = 1.0;
    for (const auto& r : rows) {
        split.push_back(r.route_split[result.series.dominant_od]);
        steps.push_back(r.step);
        if (!std::isnan(split.back())) lo = std::min(lo, split.back());
    }
    const double flips = oscillation_index(split, steps, 0);
    return {flips == 0.0 && lo == 1.0 && result.metrics.oscillation_index == 0.0,
            fmt::format("flips over 2000 steps = {}; minimum share on the free-flow route = {:.6f}", flips, lo)};
}

Outcome hunting() {
    const auto cfg = load_scenario(kHunting);
    const auto net = load_network_file(cfg.network_path);
    const bool forced = selection_probability(cfg.selection, {cfg.x_serv, 1.0, cfg.x_user}) == 1.0 &&
                        selection_probability(cfg.selection, {cfg.x_serv, 0.0, cfg.x_user}) == 1.0;
    const bool all_guided = cfg.demand.size() == 1 && cfg.demand.front().guided_fraction == 1.0;
    const bool global = cfg.kernel == k(kernel::GlobalGap{5.0});
    const auto avg = evaluate_kernel(cfg, net, cfg.kernel, seeds(10));
    return {forced && all_guided && global && !cfg.pretrip_only && avg.mean_oscillation > kHuntingFloor,
            fmt::format("mean oscillation index {:.3f} per 100 steps over 10 seeds (threshold {})",
                        avg.mean_oscillation, kHuntingFloor)};
}

Outcome local_beats_global() {
    const auto cfg = load_scenario(kStandard);
    const auto net = load_network_file(cfg.network_path);
    const double radius = DistanceTable(net).diameter() / 2.0;
    const auto local = evaluate_kernel(cfg, net, k(kernel::LocalGap{radius, 5.0}), seeds(10));
    const auto global = evaluate_kernel(cfg, net, k(kernel::GlobalGap{5.0}), seeds(10));
    return {local.mean_att <= global.mean_att && local.mean_oscillation <= global.mean_oscillation,
            fmt::format("LocalGap(x_radius={}, dt=5): att {:.4f}, oscillation {:.3f}; GlobalGap(dt=5): att {:.4f}, "
                        "oscillation {:.3f}",
                        radius, local.mean_att, local.mean_oscillation, global.mean_att, global.mean_oscillation)};
}

Outcome equivalence_harness() {
    const Domain2D dom;
    const auto cfg = load_scenario(kStandard);
    const auto net = load_network_file(cfg.network_path);
    double worst = 0.0;
    for (double target : {1.0, 6.0, 40.0}) {
        const auto a = match_integral(KernelFamily::NaturalSpaceTime, {{"cx", 2.0}}, target, dom);
        const auto b = match_integral(KernelFamily::LocalGap, {{"x_radius", 2.0}}, target, dom);
        worst = std::max({worst, std::abs(total_influence(a, dom) - target) / target,
                          std::abs(total_influence(b, dom) - target) / target});
    }
    const auto box = k(kernel::LocalGap{2.0, 3.0});
    const auto same = equivalence_trial(cfg, net, box, box, seeds(3), dom);
    const auto matched = match_integral(KernelFamily::NaturalSpaceTime, {{"cx", 2.0}}, total_influence(box, dom), dom);
    const auto cross = equivalence_trial(cfg, net, box, matched, seeds(3), dom);
    const bool ok = worst < kMatchTol && same.eta_rel_diff == 0.0 && std::isfinite(cross.phase_distance) &&
                    cross.integral_rel_diff < kMatchTol && std::isfinite(cross.eta_1) && std::isfinite(cross.eta_2);
    return {ok, fmt::format("round-trip max rel error {:.2e}; self eta_rel_diff {}; cross integral_rel_diff {:.2e}, "
                            "phase_distance {:.4f}",
                            worst, same.eta_rel_diff, cross.integral_rel_diff, cross.phase_distance)};
}

Outcome optimizer_sanity() {
    const auto cfg = load_scenario(kStandard);
    const auto net = load_network_file(cfg.network_path);
    const auto s = seeds(5);
    const auto result =
        optimize(cfg, net, KernelFamily::NaturalSpaceTime, {{"cx", 0.5, 20.0}, {"ct", 0.5, 20.0}}, 60, s);
    const auto global = evaluate_kernel(cfg, net, k(kernel::GlobalGap{5.0}), s);
    bool below_trace = true;
    for (const auto& t : result.trace) below_trace = below_trace && result.best_eta <= t.eta;
    return {result.best_eta <= global.mean_att && below_trace && result.trace.size() <= 60,
            fmt::format("best eta {:.4f} at cx={:.4f}, ct={:.4f} after {} evaluations; GlobalGap(dt=5) {:.4f}",
                        result.best_eta, result.best_params.at(0), result.best_params.at(1), result.evaluations,
                        global.mean_att)};
}

Outcome determinism() {
    const auto base = fs::temp_directory_path() / "guidesim_acceptance_determinism";
    fs::remove_all(base);
    std::vector<std::string> files[2];
    for (int i = 0; i < 2; ++i) {
        const auto out = (base / std::to_string(i)).string();
        const char* argv[] = {"guidesim", "run", "--scenario", kStandard.c_str(), "--seed", "42", "--out", out.c_str()};
        if (cli::dispatch(8, argv) != 0) return {false, "run failed"};
        for (const char* name : {"metrics.csv", "timeseries.csv"}) {
            files[i].push_back(csv::read_file((fs::path(out) / name).string()));
        }
    }
    fs::remove_all(base);
    const bool same = files[0] == files[1];
    return {same, fmt::format("metrics.csv {} bytes, timeseries.csv {} bytes, identical: {}", files[0][0].size(),
                              files[0][1].size(), same)};
}

} // namespace

int main() {
    criterion("learning rule exactness", 1.0, learning_rule);
    criterion("kernel values", 1.0, kernel_values);
    criterion("integral oracle", 10.0, integral_oracle);
    criterion("principle-1 classification", 10.0, principle_one);
    criterion("static assignment under the zero kernel", 5.0, static_assignment);
    criterion("hunting reproduction", 30.0, hunting);
    criterion("local beats global", 60.0, local_beats_global);
    criterion("equivalence harness self-consistency", 60.0, equivalence_harness);
    criterion("optimizer sanity", 600.0, optimizer_sanity);
    criterion("determinism", 30.0, determinism);
    std::cout << fmt::format("{} of 10 criteria failed", failures) << std::endl;
    return failures;
}
