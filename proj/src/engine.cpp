#include "guidesim/engine.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <fmt/format.h>

namespace guidesim {

namespace {

constexpr double kAccumulatorSlack = 1e-9;

struct Source {
    DemandEntry entry;
    std::size_t od;
    NodeIndex origin;
    NodeIndex dest;
    double arrivals = 0.0;
    double guided = 0.0;
};

struct OdInfo {
    NodeIndex origin;
    NodeIndex dest;
    Path reference; ///< free-flow shortest path
    double demand = 0.0;
};

bool on_reference(const Agent& a, const Path& reference) {
    if (!a.prefix_on_reference) return false;
    if (a.hops + a.route.size() != reference.size()) return false;
    return std::equal(a.route.begin(), a.route.end(), reference.begin() + static_cast<std::ptrdiff_t>(a.hops));
}

class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, const Network& net)
        : cfg_(cfg), net_(net), distances_(net), free_flow_(net.free_flow_costs()) {
        validate(cfg_);
        volume_.assign(net_.link_count(), 0);
        realized_ = free_flow_;
        last_emitted_ = free_flow_;
        build_demand();
    }

    RunResult execute() {
        result_.series.link_ids.reserve(net_.link_count());
        for (const auto& l : net_.links()) result_.series.link_ids.push_back(l.id);
        for (std::int64_t s = 0; s < cfg_.steps; ++s) step(s);
        result_.metrics = compute_metrics(result_.series, cfg_.warmup, cfg_.convergence);
        return std::move(result_);
    }

private:
    void build_demand() {
        for (const auto& d : cfg_.demand) {
            if (!net_.has_node(d.origin) || !net_.has_node(d.dest)) {
                throw ValidationError(fmt::format("demand {}->{} references a node not in the network", d.origin, d.dest));
            }
            const auto o = net_.node_index(d.origin);
            const auto t = net_.node_index(d.dest);
            auto reference = try_shortest_path(net_, free_flow_, o, t);
            if (reference.empty()) {
                result_.warnings.push_back(fmt::format("demand {}->{} dropped: destination unreachable", d.origin, d.dest));
                continue;
            }
            const auto label = fmt::format("{}_{}", d.origin, d.dest);
            auto it = std::find(result_.series.od_labels.begin(), result_.series.od_labels.end(), label);
            const auto od = static_cast<std::size_t>(it - result_.series.od_labels.begin());
            if (it == result_.series.od_labels.end()) {
                result_.series.od_labels.push_back(label);
                ods_.push_back({o, t, std::move(reference), 0.0});
            }
            ods_[od].demand += d.rate * static_cast<double>(std::max<std::int64_t>(0, std::min(d.end, cfg_.steps) - d.start));
            sources_.push_back({d, od, o, t});
            if (std::find(station_nodes_.begin(), station_nodes_.end(), o) == station_nodes_.end()) {
                station_nodes_.push_back(o);
                stations_.emplace_back(free_flow_);
            }
        }
        std::size_t dominant = 0;
        for (std::size_t i = 1; i < ods_.size(); ++i) {
            if (ods_[i].demand > ods_[dominant].demand) dominant = i;
        }
        result_.series.dominant_od = dominant;
    }

    void spawn(Source& src, std::int64_t s) {
        Agent a;
        a.id = next_agent_++;
        a.origin = src.origin;
        a.dest = src.dest;
        a.depart_step = s;
        a.trip_start = s;
        a.node = src.origin;
        a.od = src.od;
        src.guided += src.entry.guided_fraction;
        if (src.guided >= 1.0 - kAccumulatorSlack) {
            src.guided -= 1.0;
            a.guided = true;
            // a departing guided traveler starts from what the service knows at the origin
            const auto it = std::find(station_nodes_.begin(), station_nodes_.end(), src.origin);
            a.perceived = stations_[static_cast<std::size_t>(it - station_nodes_.begin())];
        }
        a.rng = AgentRng(cfg_.seed, a.id);
        agents_.push_back(std::move(a));
        ++spawned_total_;
    }

    double congestion() const {
        if (net_.link_count() == 0) return 0.0;
        double sum = 0.0;
        for (LinkIndex l = 0; l < net_.link_count(); ++l) sum += volume_[l] / net_.link(l).capacity;
        return std::clamp(sum / static_cast<double>(net_.link_count()), 0.0, 1.0);
    }

    void step(std::int64_t s) {
        TimeSeriesRow row;
        row.step = s;

        // (1) departures
        for (auto& src : sources_) {
            if (s < src.entry.start || s >= src.entry.end) continue;
            src.arrivals += src.entry.rate;
            while (src.arrivals >= 1.0 - kAccumulatorSlack) {
                src.arrivals -= 1.0;
                spawn(src, s);
            }
        }

        // (2) decisions at nodes, then entry into the next link
        const SelectionContext ctx{cfg_.x_serv, congestion(), cfg_.x_user};
        for (auto& a : agents_) {
            if (!a.at_node()) continue;
            const bool decide = !(cfg_.pretrip_only && a.hops > 0) || a.route.empty();
            if (decide) {
                const auto d = choose_route(a, net_, cfg_.strategy, ctx, cfg_.selection, cfg_.mode, free_flow_);
                row.routes_computed += d.computed ? 1 : 0;
                if (d.failed) {
                    a.trip_end = s;
                    ++row.failed;
                    continue;
                }
            }
            const auto l = a.route.front();
            a.route.erase(a.route.begin());
            const int t = link_travel_time(net_.link(l), volume_[l]);
            ++volume_[l];
            realized_[l] = t;
            const auto& ref = ods_[a.od].reference;
            if (a.hops >= ref.size() || ref[a.hops] != l) a.prefix_on_reference = false;
            ++a.hops;
            a.link = l;
            a.node = net_.to(l);
            a.remaining = t;
        }
        std::erase_if(agents_, [](const Agent& a) { return a.trip_end >= 0; });

        // (3) advance along links
        for (auto& a : agents_) {
            if (a.at_node()) continue;
            if (--a.remaining > 0) continue;
            --volume_[*a.link];
            a.link.reset();
            if (a.node == a.dest) {
                a.trip_end = s + 1;
                ++row.completed;
                row.trip_time_sum += static_cast<double>(a.trip_end - a.depart_step);
            }
        }
        std::erase_if(agents_, [](const Agent& a) { return a.trip_end >= 0; });

        // (4) publish realized link times
        const bool periodic = s % cfg_.emission.period == 0;
        for (LinkIndex l = 0; l < net_.link_count(); ++l) {
            const double r = realized_[l];
            if (r == last_emitted_[l]) continue;
            const bool jump = std::abs(r - last_emitted_[l]) / last_emitted_[l] > cfg_.emission.change_threshold;
            if (!periodic && !jump) continue;
            items_.push_back({next_item_++, l, r, net_.from(l), s});
            last_emitted_[l] = r;
            ++row.items_emitted;
        }

        // (5) learning by guided travelers
        learners_.clear();
        for (std::size_t i = 0; i < stations_.size(); ++i) learners_.push_back({station_nodes_[i], std::ref(stations_[i])});
        for (auto& a : agents_) {
            if (a.guided) learners_.push_back({a.node, std::ref(a.perceived)});
        }
        step_learning(learners_, items_, cfg_.kernel, s, distances_, cfg_.learning);

        // (6) record
        completed_total_ += row.completed;
        failed_total_ += row.failed;
        recent_.push_back({row.completed, row.trip_time_sum});
        recent_completed_ += row.completed;
        recent_time_ += row.trip_time_sum;
        if (static_cast<std::int64_t>(recent_.size()) > cfg_.att_window) {
            recent_completed_ -= recent_.front().first;
            recent_time_ -= recent_.front().second;
            recent_.pop_front();
        }
        row.att_window = recent_completed_ > 0 ? recent_time_ / static_cast<double>(recent_completed_)
                                               : std::numeric_limits<double>::quiet_NaN();

        std::vector<std::int64_t> total(ods_.size(), 0);
        std::vector<std::int64_t> on_ref(ods_.size(), 0);
        for (const auto& a : agents_) {
            ++total[a.od];
            if (on_reference(a, ods_[a.od].reference)) ++on_ref[a.od];
        }
        row.route_split.resize(ods_.size());
        for (std::size_t od = 0; od < ods_.size(); ++od) {
            row.route_split[od] = total[od] > 0 ? static_cast<double>(on_ref[od]) / static_cast<double>(total[od])
                                                : std::numeric_limits<double>::quiet_NaN();
        }
        row.volume = volume_;
        row.active_items = items_.size();
        row.spawned_total = spawned_total_;
        row.completed_total = completed_total_;
        row.failed_total = failed_total_;
        row.in_flight = static_cast<std::int64_t>(agents_.size());
        result_.series.rows.push_back(std::move(row));
    }

    const ScenarioConfig& cfg_;
    const Network& net_;
    DistanceTable distances_;
    std::vector<double> free_flow_;
    std::vector<int> volume_;
    std::vector<double> realized_;
    std::vector<double> last_emitted_;
    std::vector<OdInfo> ods_;
    std::vector<Source> sources_;
    std::vector<Agent> agents_;
    std::vector<InfoItem> items_;
    std::vector<Learner> learners_;
    std::vector<NodeIndex> station_nodes_;
    std::vector<PerceivedCosts> stations_; ///< perception held by the guidance service at each origin
    std::deque<std::pair<std::int64_t, double>> recent_;
    std::int64_t recent_completed_ = 0;
    double recent_time_ = 0.0;
    std::uint64_t next_agent_ = 0;
    std::uint64_t next_item_ = 0;
    std::int64_t spawned_total_ = 0;
    std::int64_t completed_total_ = 0;
    std::int64_t failed_total_ = 0;
    RunResult result_;
};

} // namespace

RunResult run(const ScenarioConfig& cfg, const Network& net) { return Simulation(cfg, net).execute(); }

RunResult run(const ScenarioConfig& cfg) {
    validate(cfg);
    const auto net = load_network_file(cfg.network_path);
    return run(cfg, net);
}

double oscillation_index(const std::vector<double>& split, const std::vector<std::int64_t>& steps,
                         std::int64_t warmup) {
    std::int64_t window = 0;
    std::int64_t flips = 0;
    std::optional<double> previous;
    int last_sign = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
        const bool post = steps[i] >= warmup;
        window += post ? 1 : 0;
        if (std::isnan(split[i])) continue;
        if (post && previous) {
            const double diff = split[i] - *previous;
            const int sign = (diff > 0.0) - (diff < 0.0);
            if (sign != 0) {
                if (last_sign != 0 && sign != last_sign) ++flips;
                last_sign = sign;
            }
        }
        previous = split[i];
    }
    if (window == 0) return 0.0;
    return 100.0 * static_cast<double>(flips) / static_cast<double>(window);
}

Metrics compute_metrics(const TimeSeries& ts, std::int64_t warmup, const ConvergenceConfig& conv) {
    Metrics m;
    double time_sum = 0.0;
    std::vector<double> att;
    std::vector<double> split;
    std::vector<std::int64_t> steps;
    for (const auto& r : ts.rows) {
        steps.push_back(r.step);
        att.push_back(r.att_window);
        split.push_back(r.route_split.empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : r.route_split.at(ts.dominant_od));
        if (r.step < warmup) continue;
        m.completed += r.completed;
        m.failed += r.failed;
        m.routes_computed += r.routes_computed;
        time_sum += r.trip_time_sum;
    }
    if (m.completed > 0) m.att = time_sum / static_cast<double>(m.completed);

    // First s >= warmup whose windowed-ATT samples over [s, s + W] have CV below threshold.
    const auto n = static_cast<std::int64_t>(att.size());
    for (std::int64_t i = 0; i + conv.window < n && !m.convergence_time; ++i) {
        if (steps[i] < warmup) continue;
        double sum = 0.0;
        double sq = 0.0;
        bool valid = true;
        for (std::int64_t j = i; j <= i + conv.window; ++j) {
            if (std::isnan(att[j])) {
                valid = false;
                break;
            }
            sum += att[j];
        }
        if (!valid || sum <= 0.0) continue;
        const double count = static_cast<double>(conv.window + 1);
        const double mean = sum / count;
        for (std::int64_t j = i; j <= i + conv.window; ++j) sq += (att[j] - mean) * (att[j] - mean);
        const double cv = std::sqrt(sq / count) / mean;
        if (cv < conv.cv_threshold) m.convergence_time = steps[i];
    }

    m.oscillation_index = oscillation_index(split, steps, warmup);
    return m;
}

std::string metrics_csv(const Metrics& m) {
    std::string out = "att,convergence_time,oscillation_index,completed,failed,routes_computed\n";
    out += fmt::format("{},{},{},{},{},{}\n", csv::real(m.att),
                       m.convergence_time ? std::to_string(*m.convergence_time) : std::string("none"),
                       csv::real(m.oscillation_index), m.completed, m.failed, m.routes_computed);
    return out;
}

std::string timeseries_csv(const TimeSeries& ts) {
    std::string out = "step,att_window";
    for (const auto& label : ts.od_labels) out += ",route_split_" + label;
    for (const auto id : ts.link_ids) out += fmt::format(",vol_{}", id);
    out += ",active_items\n";
    for (const auto& r : ts.rows) {
        out += fmt::format("{},{}", r.step, csv::real(r.att_window));
        for (const auto v : r.route_split) out += "," + csv::real(v);
        for (const auto v : r.volume) out += fmt::format(",{}", v);
        out += fmt::format(",{}\n", r.active_items);
    }
    return out;
}

} // namespace guidesim
