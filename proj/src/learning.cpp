#include "guidesim/learning.hpp"

#include "guidesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include <fmt/format.h>

namespace guidesim {

void PerceivedCosts::apply_update(LinkIndex link, double new_cost, double p) {
    if (link >= costs_.size()) throw ValidationError(fmt::format("perceived costs have no link index {}", link));
    auto& old = costs_[link];
    old = old * (1.0 - p) + new_cost * p;
}

void validate(const LearningConfig& cfg) {
    if (!(cfg.expire_epsilon > 0.0 && cfg.expire_epsilon < 1.0)) {
        throw ValidationError("expire_epsilon must be in (0,1)");
    }
    if (cfg.max_age && *cfg.max_age < 1) throw ValidationError("max_age must be >= 1");
}

std::int64_t resolve_max_age(const LearningConfig& cfg, const KernelSpec& k) {
    if (cfg.max_age) return *cfg.max_age;
    const double lifetime = std::visit(
        [](const auto& shape) -> double {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (requires { shape.ct; }) {
                return shape.ct;
            } else if constexpr (requires { shape.dt; }) {
                return shape.dt;
            } else {
                static_assert(std::is_same_v<T, kernel::Zero>);
                return 0.1;
            }
        },
        k.shape);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(10.0 * lifetime)));
}

double compute_weight(const KernelSpec& k, const InfoItem& item, NodeIndex agent_position, std::int64_t now,
                      const Network& net) {
    const double x = graph_distance(net, item.origin_node, agent_position);
    return eval(k, x, static_cast<double>(now - item.birth_step));
}

double compute_weight(const KernelSpec& k, const InfoItem& item, NodeIndex agent_position, std::int64_t now,
                      const DistanceTable& distances) {
    return eval(k, distances(item.origin_node, agent_position), static_cast<double>(now - item.birth_step));
}

void step_learning(std::span<Learner> learners, std::vector<InfoItem>& items, const KernelSpec& k, std::int64_t now,
                   const DistanceTable& distances, const LearningConfig& cfg) {
    const auto max_age = resolve_max_age(cfg, k);
    std::erase_if(items, [&](const InfoItem& it) { return now - it.birth_step > max_age; });
    if (items.empty() || learners.empty()) {
        std::erase_if(items, [&](const InfoItem& it) {
            return eval(k, 0.0, static_cast<double>(now - it.birth_step)) < cfg.expire_epsilon;
        });
        return;
    }

    // Weights depend only on (item, position), so evaluate each pair once.
    std::vector<NodeIndex> positions;
    positions.reserve(learners.size());
    for (const auto& l : learners) positions.push_back(l.position);
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    const auto slot_of = [&](NodeIndex n) {
        return static_cast<std::size_t>(std::lower_bound(positions.begin(), positions.end(), n) - positions.begin());
    };

    std::vector<double> weight(items.size() * positions.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t s = 0; s < positions.size(); ++s) {
            weight[i * positions.size() + s] = compute_weight(k, items[i], positions[s], now, distances);
        }
    }

    for (auto& learner : learners) {
        const auto s = slot_of(learner.position);
        auto& table = learner.perceived.get();
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double p = weight[i * positions.size() + s];
            if (p > 0.0) table.apply_update(items[i].link, items[i].new_cost, p);
        }
    }

    std::erase_if(items, [&](const InfoItem& it) {
        return eval(k, 0.0, static_cast<double>(now - it.birth_step)) < cfg.expire_epsilon;
    });
}

} // namespace guidesim
