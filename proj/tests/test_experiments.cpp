#include <doctest.h>

#include "guidesim/error.hpp"
#include "guidesim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

using namespace guidesim;

namespace {

Network small_net() {
    return Network({},
                   {{1, 1, 2, 3.0, 3.0, 6.0},
                    {2, 2, 4, 3.0, 3.0, 6.0},
                    {3, 1, 3, 4.0, 4.0, 6.0},
                    {4, 3, 4, 4.0, 4.0, 6.0}},
                   false);
}

ScenarioConfig small_cfg() {
    ScenarioConfig cfg;
    cfg.demand = {{1, 4, 2.5, 0.7, 0, 200}};
    cfg.steps = 200;
    cfg.warmup = 40;
    return cfg;
}

const Domain2D kDom{40.0, 60.0, 0.05, 0.05};
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

} // namespace

TEST_CASE("parallel_for visits every index once") {
    for (std::size_t jobs : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
}

TEST_CASE("match_integral solves a box kernel") {
    const auto k = match_integral(KernelFamily::LocalGap, {{"x_radius", 2.0}}, 6.0, kDom);
    CHECK(get_parameter(k, "dt") == doctest::Approx(3.0).epsilon(0.005));
    CHECK(std::abs(total_influence(k, kDom) - 6.0) / 6.0 < 0.005);
}

TEST_CASE("match_integral solves an exponential kernel") {
    const auto k = match_integral(KernelFamily::NaturalSpaceTime, {{"cx", 2.0}}, 6.0, kDom);
    CHECK(get_parameter(k, "ct") == doctest::Approx(3.0).epsilon(0.005));
    CHECK(get_parameter(k, "mx") == std::numbers::e);
    CHECK(std::abs(total_influence(k, kDom) - 6.0) / 6.0 < 0.005);
}

TEST_CASE("match_integral round trips across families and targets") {
    for (double target : {0.5, 3.0, 20.0, 150.0}) {
        const auto a = match_integral(KernelFamily::NaturalLocal, {{"x_radius", 10.0}}, target, kDom);
        CHECK(std::abs(total_influence(a, kDom) - target) / target < 0.005);
        const auto b = match_integral(KernelFamily::NaturalSpaceTime, {{"ct", 4.0}}, target, kDom);
        CHECK(std::abs(total_influence(b, kDom) - target) / target < 0.005);
    }
}

TEST_CASE("match_integral rejects bad requests") {
    CHECK_THROWS_AS(match_integral(KernelFamily::LocalGap, {{"x_radius", 2.0}}, 1e9, kDom), ValidationError);
    CHECK_THROWS_AS(match_integral(KernelFamily::LocalGap, {}, 6.0, kDom), ValidationError);
    CHECK_THROWS_AS(match_integral(KernelFamily::LocalGap, {{"x_radius", 2.0}, {"dt", 1.0}}, 6.0, kDom),
                    ValidationError);
    CHECK_THROWS_AS(match_integral(KernelFamily::GlobalGap, {{"dt", 2.0}}, 6.0, kDom), ValidationError);
    CHECK_THROWS_AS(match_integral(KernelFamily::LocalGap, {{"x_radius", 2.0}}, -1.0, kDom), ValidationError);
}

TEST_CASE("equivalence trial of a kernel with itself") {
    const auto net = small_net();
    const KernelSpec k{kernel::LocalGap{2.0, 3.0}, {}};
    const auto r = equivalence_trial(small_cfg(), net, k, k, kSeeds, kDom);
    CHECK(r.eta_rel_diff == 0.0);
    CHECK(r.integral_rel_diff == 0.0);
    CHECK(r.phase_distance == 0.0);
    CHECK(r.seeds_used == 3);
}

TEST_CASE("equivalence trial is symmetric") {
    const auto net = small_net();
    const KernelSpec a{kernel::LocalGap{2.0, 3.0}, {}};
    const auto b = match_integral(KernelFamily::NaturalSpaceTime, {{"cx", 2.0}}, 6.0, kDom);
    const auto ab = equivalence_trial(small_cfg(), net, a, b, kSeeds, kDom);
    const auto ba = equivalence_trial(small_cfg(), net, b, a, kSeeds, kDom, false, 2);
    CHECK(ab.integral_rel_diff < 0.005);
    CHECK(std::isfinite(ab.eta_1));
    CHECK(std::isfinite(ab.eta_2));
    CHECK(std::isfinite(ab.phase_distance));
    CHECK(ab.eta_1 == ba.eta_2);
    CHECK(ab.eta_2 == ba.eta_1);
    CHECK(ab.eta_rel_diff == -ba.eta_rel_diff);
    CHECK(ab.integral_rel_diff == ba.integral_rel_diff);
    CHECK(ab.phase_distance == ba.phase_distance);
}

TEST_CASE("equivalence trial preconditions") {
    const auto net = small_net();
    const KernelSpec k{kernel::LocalGap{2.0, 3.0}, {}};
    const KernelSpec g{kernel::GlobalGap{5.0}, {}};
    CHECK_THROWS_AS(equivalence_trial(small_cfg(), net, k, k, {}, kDom), ValidationError);
    CHECK_THROWS_AS(equivalence_trial(small_cfg(), net, k, g, kSeeds, kDom), ValidationError);
    CHECK_NOTHROW(equivalence_trial(small_cfg(), net, k, g, kSeeds, kDom, true));
}

TEST_CASE("single-point sweep equals a direct evaluation") {
    const auto net = small_net();
    const auto table = sweep(small_cfg(), net, KernelFamily::LocalGap, {{"x_radius", {3.0}}, {"dt", {4.0}}}, kSeeds);
    REQUIRE(table.rows.size() == 1);
    const auto direct = evaluate_kernel(small_cfg(), net, {kernel::LocalGap{3.0, 4.0}, {}}, kSeeds);
    CHECK(table.rows[0].mean_att == direct.mean_att);
    CHECK(table.rows[0].std_att == direct.std_att);
    CHECK(table.rows[0].mean_oscillation == direct.mean_oscillation);
}

TEST_CASE("sweep rows are sorted and finite") {
    const auto net = small_net();
    const auto table =
        sweep(small_cfg(), net, KernelFamily::NaturalSpaceTime, {{"ct", {1.0, 5.0, 25.0}}}, kSeeds, 2);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.names == std::vector<std::string>{"ct"});
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(table.rows[i].error.empty());
        CHECK(std::isfinite(table.rows[i].mean_att));
        if (i > 0) CHECK(table.rows[i - 1].mean_att <= table.rows[i].mean_att);
    }
    const auto csv = sweep_csv(table);
    CHECK(csv.rfind("ct,mean_att,std_att,mean_oscillation\n", 0) == 0);
}

TEST_CASE("sweep flags invalid grid points without aborting") {
    const auto net = small_net();
    const auto table = sweep(small_cfg(), net, KernelFamily::LocalGap, {{"dt", {-1.0, 3.0}}}, kSeeds);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].error.empty());
    CHECK_FALSE(table.rows[1].error.empty());
    CHECK_THROWS(sweep(small_cfg(), net, KernelFamily::LocalGap, {}, kSeeds));
}

TEST_CASE("optimizer invariants") {
    const auto net = small_net();
    const std::vector<ParameterBound> bounds{{"cx", 0.5, 20.0}, {"ct", 0.5, 20.0}};
    const auto r = optimize(small_cfg(), net, KernelFamily::NaturalSpaceTime, bounds, 16, kSeeds);
    CHECK(r.trace.size() <= 16);
    CHECK(r.evaluations == r.trace.size());
    CHECK(r.names == std::vector<std::string>{"cx", "ct"});
    double best = INFINITY;
    for (const auto& e : r.trace) {
        best = std::min(best, e.eta);
        for (std::size_t d = 0; d < bounds.size(); ++d) {
            CHECK(e.params[d] >= bounds[d].lo);
            CHECK(e.params[d] <= bounds[d].hi);
        }
    }
    CHECK(r.best_eta == best);
    const auto again = optimize(small_cfg(), net, KernelFamily::NaturalSpaceTime, bounds, 16, kSeeds);
    REQUIRE(again.trace.size() == r.trace.size());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        CHECK(again.trace[i].params == r.trace[i].params);
        CHECK(again.trace[i].eta == r.trace[i].eta);
    }
    CHECK(optimize_csv(r).rfind("eval,cx,ct,eta\n", 0) == 0);
}

TEST_CASE("a budget spent on the lattice returns the best lattice point") {
    const auto net = small_net();
    const std::vector<ParameterBound> bounds{{"x_radius", 1.0, 12.0}, {"dt", 1.0, 12.0}};
    const auto r = optimize(small_cfg(), net, KernelFamily::LocalGap, bounds, 10, kSeeds, {10, 1});
    REQUIRE(r.trace.size() == 10);
    const auto best = std::min_element(r.trace.begin(), r.trace.end(),
                                       [](const auto& a, const auto& b) { return a.eta < b.eta; });
    CHECK(r.best_params == best->params);
}

TEST_CASE("divergent kernels carry a penalty in the optimizer") {
    const auto net = small_net();
    const auto plain = evaluate_kernel(small_cfg(), net, {kernel::GlobalGap{4.0}, {}}, kSeeds);
    const auto r = optimize(small_cfg(), net, KernelFamily::GlobalGap, {{"dt", 4.0, 4.0}}, 10, kSeeds);
    CHECK(r.best_eta == doctest::Approx(11.0 * plain.mean_att));
}

TEST_CASE("optimizer rejects malformed boxes") {
    const auto net = small_net();
    CHECK_THROWS(optimize(small_cfg(), net, KernelFamily::LocalGap, {{"dt", 5.0, 1.0}}, 20, kSeeds));
    CHECK_THROWS(optimize(small_cfg(), net, KernelFamily::LocalGap, {{"mx", 1.0, 5.0}}, 20, kSeeds));
    CHECK_THROWS(optimize(small_cfg(), net, KernelFamily::LocalGap, {{"dt", 1.0, 5.0}}, 5, kSeeds));
}

TEST_CASE("on the standard scenario a tuned space-time kernel beats both baselines") {
    const auto cfg = load_scenario(std::string(GUIDESIM_DATA_DIR) + "/two_route.cfg");
    const auto net = load_network_file(cfg.network_path);
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // parameters found by `optimize` over cx, ct in [0.5, 20] with budget 60 and seeds 1-5
    const auto tuned = evaluate_kernel(cfg, net, parse_kernel("natural-spacetime:cx=0.6523,ct=12.5431"), seeds);
    const auto zero = evaluate_kernel(cfg, net, {kernel::Zero{}, {}}, seeds);
    const auto global = evaluate_kernel(cfg, net, {kernel::GlobalGap{5.0}, {}}, seeds);
    CHECK(tuned.mean_att <= zero.mean_att);
    CHECK(tuned.mean_att <= global.mean_att);
}
