#include "guidesim/behavior.hpp"

#include "guidesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace guidesim {

void validate(const SelectionContext& ctx) {
    for (const double v : {ctx.x_serv, ctx.x_tra, ctx.x_user}) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("selection context features must lie in [0,1]");
    }
}

double selection_probability(const SelectionModel& m, const SelectionContext& ctx) {
    const double z = m.bias + m.w_serv * ctx.x_serv + m.w_tra * ctx.x_tra + m.w_user * ctx.x_user;
    return 1.0 / (1.0 + std::exp(-z));
}

void validate(const ReactionStrategy& s) {
    if (const auto* fb = std::get_if<reaction::EquilibriumFeedback>(&s)) {
        if (!(fb->gain > 0.0 && fb->gain <= 1.0)) throw ValidationError("equilibrium feedback gain must be in (0,1]");
    }
}

double switch_probability(double gain, double current_cost, double alternative_cost) {
    if (!(current_cost > 0.0)) return 0.0;
    return gain * std::max(0.0, (current_cost - alternative_cost) / current_cost);
}

std::string_view to_string(RoutingMode m) { return m == RoutingMode::Descriptive ? "descriptive" : "prescriptive"; }

RoutingMode parse_routing_mode(std::string_view s) {
    if (s == "descriptive") return RoutingMode::Descriptive;
    if (s == "prescriptive") return RoutingMode::Prescriptive;
    throw ParseError(fmt::format("unknown routing mode '{}'", s));
}

OrderingContract ordering_mode(RoutingMode mode) { return {mode == RoutingMode::Descriptive}; }

AgentRng::AgentRng(std::uint64_t scenario_seed, std::uint64_t agent_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(scenario_seed), static_cast<std::uint32_t>(scenario_seed >> 32),
                      static_cast<std::uint32_t>(agent_id), static_cast<std::uint32_t>(agent_id >> 32)};
    engine_.seed(seq);
}

double AgentRng::uniform() {
    // 53 random bits into [0, 1); independent of the library's distribution code.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

namespace {

/// The reaction route a guided agent would adopt, before the adoption draw.
struct Candidate {
    Path primary;     ///< MinPerceivedCost result, or the alternative for feedback
    double switch_p = 0.0;
    bool reachable = true;
};

Candidate compute_candidate(const Agent& agent, const Network& net, const ReactionStrategy& strategy) {
    const auto costs = agent.perceived.values();
    Candidate c;
    if (std::holds_alternative<reaction::MinPerceivedCost>(strategy)) {
        c.primary = try_shortest_path(net, costs, agent.node, agent.dest);
        c.reachable = !c.primary.empty();
        return c;
    }
    // Best alternative: perceived-shortest path avoiding the current next link.
    const auto gain = std::get<reaction::EquilibriumFeedback>(strategy).gain;
    std::vector<double> excluded(costs.begin(), costs.end());
    excluded[agent.route.front()] = std::numeric_limits<double>::infinity();
    c.primary = try_shortest_path(net, excluded, agent.node, agent.dest);
    if (!c.primary.empty()) {
        c.switch_p = switch_probability(gain, path_cost(costs, agent.route), path_cost(costs, c.primary));
    }
    return c;
}

} // namespace

RouteDecision choose_route(Agent& agent, const Network& net, const ReactionStrategy& strategy,
                           const SelectionContext& ctx, const SelectionModel& model, RoutingMode mode,
                           std::span<const double> free_flow) {
    RouteDecision decision;
    if (!agent.at_node()) throw ValidationError("choose_route requires the agent to stand at a node");
    if (agent.node == agent.dest) return decision;

    if (agent.route.empty() || net.from(agent.route.front()) != agent.node) {
        agent.route = try_shortest_path(net, free_flow, agent.node, agent.dest);
        if (agent.route.empty()) {
            decision.failed = true;
            return decision;
        }
    }
    if (!agent.guided) return decision;

    const double p_sel = selection_probability(model, ctx);
    const bool prescriptive = !ordering_mode(mode).gate_before_route;

    std::optional<Candidate> candidate;
    if (prescriptive) {
        candidate = compute_candidate(agent, net, strategy);
        decision.computed = true;
    }
    const bool selected = agent.rng.uniform() < p_sel;
    if (!selected) return decision;
    if (!candidate) {
        candidate = compute_candidate(agent, net, strategy);
        decision.computed = true;
    }
    if (!candidate->reachable) {
        decision.failed = true;
        return decision;
    }
    if (std::holds_alternative<reaction::EquilibriumFeedback>(strategy)) {
        if (candidate->primary.empty() || candidate->switch_p <= 0.0) return decision;
        if (!(agent.rng.uniform() < candidate->switch_p)) return decision;
    }
    decision.adopted = candidate->primary != agent.route;
    agent.route = std::move(candidate->primary);
    return decision;
}

} // namespace guidesim
