#pragma once

#include "guidesim/learning.hpp"
#include "guidesim/network.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <variant>

namespace guidesim {

/// Features of the selection decision, each in [0, 1].
struct SelectionContext {
    double x_serv = 1.0; ///< service quality
    double x_tra = 0.0;  ///< congestion: network mean volume/capacity, clipped
    double x_user = 1.0; ///< compliance propensity
};

void validate(const SelectionContext& ctx);

/// Logistic stand-in for the user-selection probability.
struct SelectionModel {
    double bias = 0.0;
    double w_serv = 1.0;
    double w_tra = 1.0;
    double w_user = 1.0;
};

/// logistic(bias + w_serv*x_serv + w_tra*x_tra + w_user*x_user)
double selection_probability(const SelectionModel& m, const SelectionContext& ctx);

namespace reaction {
/// Shortest path under the traveler's perceived costs.
struct MinPerceivedCost {};
/// Switch to the best alternative with probability gain * max(0, (K_cur - K_alt) / K_cur).
struct EquilibriumFeedback {
    double gain = 0.5;
};
} // namespace reaction

using ReactionStrategy = std::variant<reaction::MinPerceivedCost, reaction::EquilibriumFeedback>;

void validate(const ReactionStrategy& s);

/// Probability that an equilibrium-feedback traveler leaves its current route.
double switch_probability(double gain, double current_cost, double alternative_cost);

enum class RoutingMode { Descriptive, Prescriptive };

std::string_view to_string(RoutingMode m);
RoutingMode parse_routing_mode(std::string_view s);

/// Who acts first: in descriptive routing the traveler applies the selection
/// gate before any route is computed; in prescriptive routing the system
/// computes a route first and the traveler then decides whether to adopt it.
struct OrderingContract {
    bool gate_before_route = true;
};

OrderingContract ordering_mode(RoutingMode mode);

/// Per-traveler random stream, derived from the scenario seed and agent id so
/// results do not depend on the order in which travelers are processed.
class AgentRng {
public:
    AgentRng() = default;
    AgentRng(std::uint64_t scenario_seed, std::uint64_t agent_id);

    /// Uniform variate in [0, 1).
    double uniform();

private:
    std::mt19937_64 engine_;
};

struct Agent {
    std::uint64_t id = 0;
    NodeIndex origin = 0;
    NodeIndex dest = 0;
    std::int64_t depart_step = 0;
    bool guided = false;

    /// Current node when `link` is empty; otherwise the downstream node of `link`.
    NodeIndex node = 0;
    std::optional<LinkIndex> link;
    int remaining = 0; ///< steps left on `link`

    PerceivedCosts perceived;
    Path route; ///< planned links from `node` onward
    std::int64_t trip_start = 0;
    std::int64_t trip_end = -1;
    AgentRng rng;

    // Engine bookkeeping for route-split accounting.
    std::size_t od = 0;
    std::size_t hops = 0;
    bool prefix_on_reference = true;

    bool at_node() const { return !link.has_value(); }
};

struct RouteDecision {
    bool computed = false; ///< a guided reaction route was computed
    bool adopted = false;  ///< the agent's route was replaced by the reaction
    bool failed = false;   ///< destination unreachable; the agent must be removed
};

/**
 * Routing decision for an agent standing at a node.
 *
 * Unguided agents take the free-flow shortest path once and keep it. Guided
 * agents pass the selection gate with probability P_sel (one uniform draw per
 * decision) and then react per `strategy`; otherwise they keep their route.
 * `mode` only changes whether the reaction route is computed before or after
 * the gate, so outcomes are identical across modes for the same stream.
 */
RouteDecision choose_route(Agent& agent, const Network& net, const ReactionStrategy& strategy,
                           const SelectionContext& ctx, const SelectionModel& model, RoutingMode mode,
                           std::span<const double> free_flow);

} // namespace guidesim
