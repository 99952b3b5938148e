#pragma once

#include "guidesim/kernels.hpp"
#include "guidesim/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace guidesim {

/// One piece of traffic information: a link's newly realized travel time,
/// emerging at the link's upstream node.
struct InfoItem {
    std::uint64_t id = 0;
    LinkIndex link = 0;
    double new_cost = 1.0;
    NodeIndex origin_node = 0;
    std::int64_t birth_step = 0;
};

/// A traveler's perceived cost of every link, in steps.
class PerceivedCosts {
public:
    PerceivedCosts() = default;
    explicit PerceivedCosts(std::vector<double> costs) : costs_(std::move(costs)) {}
    /// Static knowledge: free-flow time of every link.
    static PerceivedCosts free_flow(const Network& net) { return PerceivedCosts(net.free_flow_costs()); }

    double at(LinkIndex link) const { return costs_.at(link); }
    std::span<const double> values() const { return costs_; }
    std::size_t size() const { return costs_.size(); }

    /// Convex blend toward `new_cost` with learning weight p:
    /// old * (1 - p) + new_cost * p. Throws ValidationError for an unknown link.
    void apply_update(LinkIndex link, double new_cost, double p);

    bool operator==(const PerceivedCosts&) const = default;

private:
    std::vector<double> costs_;
};

struct LearningConfig {
    double expire_epsilon = 1e-4;
    /// Unset means 10 * Ct or 10 * dt of the active kernel.
    std::optional<std::int64_t> max_age;
};

void validate(const LearningConfig& cfg);

/// The effective item lifetime cap for a kernel.
std::int64_t resolve_max_age(const LearningConfig& cfg, const KernelSpec& k);

/// p for one item as seen by a traveler at `agent_position` at step `now`.
double compute_weight(const KernelSpec& k, const InfoItem& item, NodeIndex agent_position, std::int64_t now,
                      const Network& net);
double compute_weight(const KernelSpec& k, const InfoItem& item, NodeIndex agent_position, std::int64_t now,
                      const DistanceTable& distances);

/// A traveler as seen by the learning step: where it is and what it believes.
struct Learner {
    NodeIndex position;
    std::reference_wrapper<PerceivedCosts> perceived;
};

/**
 * One learning step over every traveler.
 *
 * Items older than the lifetime cap are discarded first. Each surviving item
 * is then applied to every learner in (birth_step, id) order, so for the same
 * link the newest information receives the last convex update. Finally items
 * whose weight at their own origin has fallen below `expire_epsilon` are
 * dropped. `items` must be sorted by (birth_step, id).
 */
void step_learning(std::span<Learner> learners, std::vector<InfoItem>& items, const KernelSpec& k, std::int64_t now,
                   const DistanceTable& distances, const LearningConfig& cfg);

} // namespace guidesim
