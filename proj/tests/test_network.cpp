#include <doctest.h>

#include "guidesim/error.hpp"
#include "guidesim/network.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace guidesim;

namespace {

const char* kHeaderLine = "link_id,from_node,to_node,length,t0,capacity,alpha,beta\n";

Network parallel_pair(double cost_a, double cost_b) {
    return Network({}, {{1, 1, 2, 1.0, cost_a, 10.0}, {2, 1, 2, 1.0, cost_b, 10.0}}, false);
}

// Exhaustive search over simple paths; the oracle for Dijkstra on tiny graphs.
void enumerate(const Network& net, const std::vector<double>& costs, NodeIndex at, NodeIndex dest,
               std::vector<bool>& seen, double so_far, double& best) {
    if (at == dest) {
        best = std::min(best, so_far);
        return;
    }
    for (const auto l : net.outgoing(at)) {
        const auto next = net.to(l);
        if (seen[next] || !std::isfinite(costs[l])) continue;
        seen[next] = true;
        enumerate(net, costs, next, dest, seen, so_far + costs[l], best);
        seen[next] = false;
    }
}

double brute_force_cost(const Network& net, const std::vector<double>& costs, NodeIndex o, NodeIndex d) {
    std::vector<bool> seen(net.node_count(), false);
    seen[o] = true;
    double best = std::numeric_limits<double>::infinity();
    enumerate(net, costs, o, d, seen, 0.0, best);
    return best;
}

Network random_network(std::mt19937& gen, std::size_t nodes, bool symmetric) {
    std::uniform_real_distribution<double> len(0.5, 10.0);
    std::bernoulli_distribution edge(0.35);
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < nodes; ++i) ids.push_back(static_cast<NodeId>(i + 1));
    std::vector<Link> links;
    LinkId next = 1;
    for (std::size_t a = 0; a < nodes; ++a) {
        for (std::size_t b = symmetric ? a + 1 : 0; b < nodes; ++b) {
            if (a == b || !edge(gen)) continue;
            const double l = len(gen);
            links.push_back({next++, ids[a], ids[b], l, l, 5.0});
            if (symmetric) links.push_back({next++, ids[b], ids[a], l, l, 5.0});
        }
    }
    return Network(ids, links, true);
}

} // namespace

TEST_CASE("network file with one link parses") {
    const auto net = load_network(std::string(kHeaderLine) + "1,1,2,10.0,5,100,0.15,4\n");
    CHECK(net.link_count() == 1);
    CHECK(net.node_count() == 2);
    CHECK(net.link(0).t0 == 5.0);
    CHECK(net.link(0).length == 10.0);
    CHECK(net.link(0).capacity == 100.0);
}

TEST_CASE("alpha and beta default when omitted") {
    const auto net = load_network(std::string(kHeaderLine) + "7,1,2,1,2,3\n8,2,1,1,2,3,,\n");
    for (const auto& l : net.links()) {
        CHECK(l.alpha == kDefaultAlpha);
        CHECK(l.beta == kDefaultBeta);
    }
}

TEST_CASE("malformed network files are rejected") {
    CHECK_THROWS_AS(load_network("1,1,2,10.0,5,100,0.15,4\n"), ParseError);
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,2,ten,5,100,0.15,4\n"), ParseError);
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,2,10\n"), ParseError);
    // dangling endpoint against an explicit node list
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,99,10.0,5,100,0.15,4\n#nodes\n1\n2\n"),
                    ValidationError);
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,2,10.0,5,100,0.15,4\n1,2,1,10.0,5,100,0.15,4\n"),
                    ValidationError);
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,1,10.0,5,100,0.15,4\n"), ValidationError);
    CHECK_THROWS_AS(load_network(std::string(kHeaderLine) + "1,1,2,10.0,5,0,0.15,4\n"), ValidationError);
}

TEST_CASE("BPR travel time") {
    Link l{1, 1, 2, 1.0, 20.0, 100.0};
    CHECK(link_travel_time(l, 0.0) == 20);
    CHECK(link_travel_time(l, 100.0) == 23);
    l.alpha = 0.0;
    for (double v : {0.0, 1.0, 1e3, 1e6}) CHECK(link_travel_time(l, v) == 20);
    // monotone in volume
    l.alpha = 0.15;
    int prev = 0;
    for (double v = 0.0; v < 400.0; v += 7.0) {
        const int t = link_travel_time(l, v);
        CHECK(t >= prev);
        prev = t;
    }
    Link tiny{2, 1, 2, 1.0, 0.2, 1.0};
    CHECK(link_travel_time(tiny, 0.0) == 1);
}

TEST_CASE("shortest path prefers the cheaper of two parallel links") {
    const auto net = parallel_pair(5.0, 7.0);
    const auto path = shortest_path(net, net.free_flow_costs(), net.node_index(1), net.node_index(2));
    REQUIRE(path.size() == 1);
    CHECK(net.link(path[0]).id == 1);
}

TEST_CASE("equal costs break ties on the smaller link id") {
    const auto net = Network({}, {{2, 1, 2, 1.0, 5.0, 10.0}, {1, 1, 2, 1.0, 5.0, 10.0}}, false);
    const auto path = shortest_path(net, net.free_flow_costs(), net.node_index(1), net.node_index(2));
    REQUIRE(path.size() == 1);
    CHECK(net.link(path[0]).id == 1);
}

TEST_CASE("disconnected destination is unreachable") {
    const auto net = Network({1, 2, 3, 4}, {{1, 1, 2, 1.0, 1.0, 1.0}, {2, 3, 4, 1.0, 1.0, 1.0}}, true);
    CHECK_THROWS_AS(shortest_path(net, net.free_flow_costs(), net.node_index(1), net.node_index(4)), UnreachableError);
    CHECK(try_shortest_path(net, net.free_flow_costs(), net.node_index(1), net.node_index(4)).empty());
    CHECK(std::isinf(graph_distance(net, net.node_index(1), net.node_index(4))));
}

TEST_CASE("negative costs are rejected") {
    const auto net = parallel_pair(5.0, 7.0);
    const std::vector<double> costs{-1.0, 2.0};
    CHECK_THROWS(shortest_path(net, costs, 0, 1));
}

TEST_CASE("graph distance along a chain") {
    const auto net = Network({}, {{1, 1, 2, 3.0, 1.0, 1.0}, {2, 2, 3, 4.0, 1.0, 1.0}}, false);
    CHECK(graph_distance(net, net.node_index(1), net.node_index(1)) == 0.0);
    CHECK(graph_distance(net, net.node_index(1), net.node_index(3)) == 7.0);
    const DistanceTable table(net);
    CHECK(table(net.node_index(1), net.node_index(3)) == 7.0);
    CHECK(table.diameter() == 7.0);
}

TEST_CASE("Dijkstra agrees with exhaustive path enumeration") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> cost(0.0, 9.0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = random_network(gen, 3 + static_cast<std::size_t>(trial % 4), false);
        std::vector<double> costs(net.link_count());
        for (auto& c : costs) c = cost(gen);
        for (NodeIndex o = 0; o < net.node_count(); ++o) {
            for (NodeIndex d = 0; d < net.node_count(); ++d) {
                if (o == d) continue;
                const double expected = brute_force_cost(net, costs, o, d);
                const auto path = try_shortest_path(net, costs, o, d);
                if (std::isinf(expected)) {
                    CHECK(path.empty());
                    continue;
                }
                REQUIRE_FALSE(path.empty());
                CHECK(net.from(path.front()) == o);
                CHECK(net.to(path.back()) == d);
                for (std::size_t i = 1; i < path.size(); ++i) CHECK(net.from(path[i]) == net.to(path[i - 1]));
                CHECK(path_cost(costs, path) == doctest::Approx(expected).epsilon(1e-12));
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("graph distance satisfies the triangle inequality") {
    std::mt19937 gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_network(gen, 2 + static_cast<std::size_t>(trial % 5), true);
        const DistanceTable table(net);
        const auto n = net.node_count();
        for (NodeIndex a = 0; a < n; ++a) {
            CHECK(table(a, a) == 0.0);
            for (NodeIndex b = 0; b < n; ++b) {
                CHECK(table(a, b) == graph_distance(net, a, b));
                for (NodeIndex c = 0; c < n; ++c) {
                    if (std::isinf(table(a, b)) || std::isinf(table(b, c))) continue;
                    CHECK(table(a, c) <= table(a, b) + table(b, c) + 1e-9);
                }
            }
        }
    }
}
