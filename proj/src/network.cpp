#include "guidesim/network.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include <fmt/format.h>

namespace guidesim {

namespace {

constexpr std::string_view kHeader = "link_id,from_node,to_node,length,t0,capacity,alpha,beta";

/// Dijkstra from `origin` over non-negative link weights. Returns per-node
/// distance and predecessor link (npos when none).
struct SearchTree {
    std::vector<double> dist;
    std::vector<LinkIndex> pred;
};

constexpr LinkIndex kNoLink = static_cast<LinkIndex>(-1);

SearchTree dijkstra(const Network& net, NodeIndex origin, const std::function<double(LinkIndex)>& weight) {
    const auto n = net.node_count();
    SearchTree tree{std::vector<double>(n, kUnreachable), std::vector<LinkIndex>(n, kNoLink)};
    using Entry = std::pair<double, NodeIndex>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    std::vector<bool> done(n, false);
    tree.dist[origin] = 0.0;
    heap.emplace(0.0, origin);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        done[u] = true;
        for (const auto l : net.outgoing(u)) {
            const double w = weight(l);
            if (!std::isfinite(w)) continue;
            const auto v = net.to(l);
            const double nd = d + w;
            if (nd < tree.dist[v]) {
                tree.dist[v] = nd;
                tree.pred[v] = l;
                heap.emplace(nd, v);
            } else if (nd == tree.dist[v] && !done[v] && l < tree.pred[v]) {
                tree.pred[v] = l;
            }
        }
    }
    return tree;
}

} // namespace

void validate(const DemandEntry& d) {
    if (d.origin == d.dest) {
        throw ValidationError(fmt::format("demand {}->{}: origin equals dest", d.origin, d.dest));
    }
    if (!(d.rate >= 0.0) || !std::isfinite(d.rate)) {
        throw ValidationError(fmt::format("demand {}->{}: rate must be >= 0", d.origin, d.dest));
    }
    if (!(d.guided_fraction >= 0.0 && d.guided_fraction <= 1.0)) {
        throw ValidationError(fmt::format("demand {}->{}: guided_fraction must be in [0,1]", d.origin, d.dest));
    }
    if (d.start > d.end || d.start < 0) {
        throw ValidationError(fmt::format("demand {}->{}: window start must be in [0, end]", d.origin, d.dest));
    }
}

Network::Network(std::vector<NodeId> nodes, std::vector<Link> links, bool nodes_authoritative)
    : links_(std::move(links)) {
    std::set<NodeId> node_set;
    for (const auto id : nodes) {
        if (!node_set.insert(id).second) throw ValidationError(fmt::format("duplicate node id {}", id));
    }
    std::set<LinkId> seen;
    for (const auto& l : links_) {
        if (!seen.insert(l.id).second) throw ValidationError(fmt::format("duplicate link id {}", l.id));
        if (l.from == l.to) throw ValidationError(fmt::format("link {} is a self-loop", l.id));
        if (!(l.length > 0.0) || !std::isfinite(l.length)) throw ValidationError(fmt::format("link {}: length must be > 0", l.id));
        if (!(l.t0 > 0.0) || !std::isfinite(l.t0)) throw ValidationError(fmt::format("link {}: t0 must be > 0", l.id));
        if (!(l.capacity > 0.0) || !std::isfinite(l.capacity)) throw ValidationError(fmt::format("link {}: capacity must be > 0", l.id));
        if (!(l.alpha >= 0.0) || !std::isfinite(l.alpha)) throw ValidationError(fmt::format("link {}: alpha must be >= 0", l.id));
        if (!(l.beta >= 1.0) || !std::isfinite(l.beta)) throw ValidationError(fmt::format("link {}: beta must be >= 1", l.id));
        for (const auto end : {l.from, l.to}) {
            if (nodes_authoritative && !node_set.contains(end)) {
                throw ValidationError(fmt::format("link {} references unknown node {}", l.id, end));
            }
            node_set.insert(end);
        }
    }
    if (node_set.empty()) throw ValidationError("network has no nodes");

    node_ids_.assign(node_set.begin(), node_set.end());
    for (NodeIndex i = 0; i < node_ids_.size(); ++i) node_index_.emplace(node_ids_[i], i);

    std::sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) { return a.id < b.id; });
    outgoing_.resize(node_ids_.size());
    for (LinkIndex i = 0; i < links_.size(); ++i) {
        link_index_.emplace(links_[i].id, i);
        from_.push_back(node_index_.at(links_[i].from));
        to_.push_back(node_index_.at(links_[i].to));
        outgoing_[from_.back()].push_back(i);
    }
}

NodeIndex Network::node_index(NodeId id) const {
    const auto it = node_index_.find(id);
    if (it == node_index_.end()) throw ValidationError(fmt::format("unknown node {}", id));
    return it->second;
}

LinkIndex Network::link_index(LinkId id) const {
    const auto it = link_index_.find(id);
    if (it == link_index_.end()) throw ValidationError(fmt::format("unknown link {}", id));
    return it->second;
}

std::vector<double> Network::free_flow_costs() const {
    std::vector<double> costs;
    costs.reserve(links_.size());
    for (const auto& l : links_) costs.push_back(link_travel_time(l, 0.0));
    return costs;
}

Network load_network(std::string_view text) {
    const auto rows = csv::lines(text);
    std::vector<Link> links;
    std::vector<NodeId> nodes;
    bool header_seen = false;
    bool in_nodes = false;
    for (std::size_t lineno = 1; lineno <= rows.size(); ++lineno) {
        const auto line = csv::trim(rows[lineno - 1]);
        if (line.empty()) continue;
        if (line == "#nodes") {
            in_nodes = true;
            continue;
        }
        if (line.front() == '#') continue;
        if (!header_seen) {
            std::string compact;
            for (const auto& f : csv::split(line)) compact += (compact.empty() ? "" : ",") + f;
            if (compact != kHeader) {
                throw ParseError(fmt::format("line {}: expected header '{}'", lineno, kHeader));
            }
            header_seen = true;
            continue;
        }
        const auto what = fmt::format("line {}", lineno);
        if (in_nodes) {
            nodes.push_back(csv::to_int(line, what));
            continue;
        }
        const auto f = csv::split(line);
        if (f.size() != 6 && f.size() != 8) {
            throw ParseError(fmt::format("line {}: expected 8 fields, got {}", lineno, f.size()));
        }
        Link l;
        l.id = csv::to_int(f[0], what + " link_id");
        l.from = csv::to_int(f[1], what + " from_node");
        l.to = csv::to_int(f[2], what + " to_node");
        l.length = csv::to_double(f[3], what + " length");
        l.t0 = csv::to_double(f[4], what + " t0");
        l.capacity = csv::to_double(f[5], what + " capacity");
        if (f.size() == 8) {
            if (!f[6].empty()) l.alpha = csv::to_double(f[6], what + " alpha");
            if (!f[7].empty()) l.beta = csv::to_double(f[7], what + " beta");
        }
        links.push_back(l);
    }
    if (!header_seen) throw ParseError(fmt::format("missing header '{}'", kHeader));
    const bool authoritative = !nodes.empty();
    return Network(std::move(nodes), std::move(links), authoritative);
}

Network load_network_file(const std::string& path) { return load_network(csv::read_file(path)); }

int link_travel_time(const Link& link, double volume) {
    const double ratio = std::max(volume, 0.0) / link.capacity;
    const double raw = link.t0 * (1.0 + link.alpha * std::pow(ratio, link.beta));
    // Absorb representation error so that e.g. 20 * 1.15 rounds to 23, not 24.
    const double steps = std::ceil(raw - 1e-9);
    return std::max(1, static_cast<int>(steps));
}

Path try_shortest_path(const Network& net, std::span<const double> costs, NodeIndex origin, NodeIndex dest) {
    if (origin == dest) return {};
    const auto tree = dijkstra(net, origin, [&](LinkIndex l) { return costs[l]; });
    if (tree.pred[dest] == kNoLink) return {};
    Path path;
    for (auto n = dest; n != origin; n = net.from(tree.pred[n])) path.push_back(tree.pred[n]);
    std::reverse(path.begin(), path.end());
    return path;
}

Path shortest_path(const Network& net, std::span<const double> costs, NodeIndex origin, NodeIndex dest) {
    if (costs.size() != net.link_count()) throw ValidationError("cost vector size does not match link count");
    for (const auto c : costs) {
        if (c < 0.0) throw ValidationError("shortest_path requires non-negative costs");
    }
    auto path = try_shortest_path(net, costs, origin, dest);
    if (path.empty() && origin != dest) {
        throw UnreachableError(fmt::format("node {} unreachable from node {}", net.node_id(dest), net.node_id(origin)));
    }
    return path;
}

double path_cost(std::span<const double> costs, const Path& path) {
    double total = 0.0;
    for (const auto l : path) total += costs[l];
    return total;
}

double graph_distance(const Network& net, NodeIndex origin, NodeIndex position) {
    if (origin == position) return 0.0;
    const auto by_length = [&](LinkIndex l) { return net.link(l).length; };
    const double forward = dijkstra(net, origin, by_length).dist[position];
    if (std::isfinite(forward)) return forward;
    return dijkstra(net, position, by_length).dist[origin];
}

DistanceTable::DistanceTable(const Network& net) : n_(net.node_count()), dist_(n_ * n_, kUnreachable) {
    const auto by_length = [&](LinkIndex l) { return net.link(l).length; };
    for (NodeIndex o = 0; o < n_; ++o) {
        const auto tree = dijkstra(net, o, by_length);
        for (NodeIndex p = 0; p < n_; ++p) dist_[o * n_ + p] = tree.dist[p];
    }
    // Fall back to the reverse direction where the forward one is unreachable.
    auto directed = dist_;
    for (NodeIndex o = 0; o < n_; ++o) {
        for (NodeIndex p = 0; p < n_; ++p) {
            if (!std::isfinite(directed[o * n_ + p])) dist_[o * n_ + p] = directed[p * n_ + o];
        }
    }
}

double DistanceTable::diameter() const {
    double best = 0.0;
    for (const auto d : dist_) {
        if (std::isfinite(d)) best = std::max(best, d);
    }
    return best;
}

} // namespace guidesim
