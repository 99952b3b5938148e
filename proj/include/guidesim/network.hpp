#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace guidesim {

using NodeId = std::int64_t;
using LinkId = std::int64_t;

/// Dense position of a link inside a Network. Links are stored sorted by id,
/// so comparing indices is the same as comparing ids.
using LinkIndex = std::size_t;
/// Dense position of a node inside a Network (nodes sorted by id).
using NodeIndex = std::size_t;

/// Ordered link sequence, as link indices.
using Path = std::vector<LinkIndex>;

inline constexpr double kDefaultAlpha = 0.15;
inline constexpr double kDefaultBeta = 4.0;
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Link {
    LinkId id = 0;
    NodeId from = 0;
    NodeId to = 0;
    double length = 1.0;   // distance units
    double t0 = 1.0;       // free-flow time, steps
    double capacity = 1.0; // vehicles per step
    double alpha = kDefaultAlpha;
    double beta = kDefaultBeta;
};

struct DemandEntry {
    NodeId origin = 0;
    NodeId dest = 0;
    double rate = 0.0;            // expected departures per step
    double guided_fraction = 1.0; // market penetration
    std::int64_t start = 0;       // window [start, end)
    std::int64_t end = 0;
};

void validate(const DemandEntry& d);

/**
 * Directed road network. Immutable once constructed; safe to share across
 * concurrent simulation runs.
 */
class Network {
public:
    /// Validates and builds. Node ids in `nodes` may be empty, in which case
    /// the node set is implied by link endpoints.
    Network(std::vector<NodeId> nodes, std::vector<Link> links, bool nodes_authoritative);

    std::size_t node_count() const { return node_ids_.size(); }
    std::size_t link_count() const { return links_.size(); }

    const Link& link(LinkIndex i) const { return links_.at(i); }
    std::span<const Link> links() const { return links_; }
    NodeId node_id(NodeIndex i) const { return node_ids_.at(i); }
    std::span<const NodeId> node_ids() const { return node_ids_; }

    bool has_node(NodeId id) const { return node_index_.contains(id); }
    bool has_link(LinkId id) const { return link_index_.contains(id); }
    /// Throws ValidationError for unknown ids.
    NodeIndex node_index(NodeId id) const;
    LinkIndex link_index(LinkId id) const;

    NodeIndex from(LinkIndex i) const { return from_[i]; }
    NodeIndex to(LinkIndex i) const { return to_[i]; }
    /// Outgoing links of a node, ascending by link id.
    std::span<const LinkIndex> outgoing(NodeIndex n) const { return outgoing_[n]; }

    /// Free-flow travel time of every link, quantized to whole steps.
    std::vector<double> free_flow_costs() const;

private:
    std::vector<NodeId> node_ids_;
    std::vector<Link> links_;
    std::unordered_map<NodeId, NodeIndex> node_index_;
    std::unordered_map<LinkId, LinkIndex> link_index_;
    std::vector<NodeIndex> from_;
    std::vector<NodeIndex> to_;
    std::vector<std::vector<LinkIndex>> outgoing_;
};

/// Parses the network CSV: header `link_id,from_node,to_node,length,t0,capacity,alpha,beta`,
/// one link per row, and an optional `#nodes` section listing every node id.
Network load_network(std::string_view text);
Network load_network_file(const std::string& path);

/// BPR closure t0 * (1 + alpha * (volume/capacity)^beta), rounded up to whole steps, at least 1.
int link_travel_time(const Link& link, double volume);

/// Minimum-cost path; among equal-cost predecessors the smaller link id wins.
/// `costs` is indexed by LinkIndex; infinite costs mark excluded links.
/// Throws UnreachableError when `dest` cannot be reached.
Path shortest_path(const Network& net, std::span<const double> costs, NodeIndex origin, NodeIndex dest);

/// Same search, returning an empty path instead of throwing.
Path try_shortest_path(const Network& net, std::span<const double> costs, NodeIndex origin, NodeIndex dest);

double path_cost(std::span<const double> costs, const Path& path);

/// Road distance (summed link lengths) from `origin` to `position`; when that
/// direction is unreachable the reverse direction is used, and kUnreachable
/// when neither is.
double graph_distance(const Network& net, NodeIndex origin, NodeIndex position);

/// All-pairs graph_distance, precomputed once per network.
class DistanceTable {
public:
    explicit DistanceTable(const Network& net);

    double operator()(NodeIndex origin, NodeIndex position) const {
        return dist_[origin * n_ + position];
    }

    /// Largest finite distance over all node pairs.
    double diameter() const;

private:
    std::size_t n_;
    std::vector<double> dist_;
};

} // namespace guidesim
