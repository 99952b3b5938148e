#include "guidesim/scenario.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/error.hpp"

#include <cmath>
#include <filesystem>
#include <map>

#include <fmt/format.h>

namespace guidesim {

namespace {

bool parse_bool(std::string_view v, std::string_view key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(fmt::format("{}: expected true/false, got '{}'", key, v));
}

} // namespace

void validate(const ScenarioConfig& cfg) {
    if (cfg.warmup < 0) throw ValidationError(fmt::format("warmup ({}) must be >= 0", cfg.warmup));
    if (cfg.steps <= cfg.warmup) {
        throw ValidationError(fmt::format("steps ({}) must exceed warmup ({})", cfg.steps, cfg.warmup));
    }
    if (cfg.emission.period < 1) throw ValidationError("emission period must be >= 1");
    if (!(cfg.emission.change_threshold >= 0.0)) throw ValidationError("emission change_threshold must be >= 0");
    if (cfg.att_window < 1) throw ValidationError("att_window must be >= 1");
    if (cfg.convergence.window < 1) throw ValidationError("convergence_window must be >= 1");
    if (!(cfg.convergence.cv_threshold > 0.0)) throw ValidationError("convergence_cv must be > 0");
    validate(cfg.kernel);
    validate(cfg.learning);
    validate(cfg.strategy);
    validate(SelectionContext{cfg.x_serv, 0.0, cfg.x_user});
    for (const auto& d : cfg.demand) validate(d);
}

ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir) {
    ScenarioConfig cfg;
    std::string section;
    std::string kernel_type;
    std::map<std::string, double> kernel_params;
    double gain = 0.5;
    std::string strategy = "min-perceived-cost";

    const auto rows = csv::lines(text);
    for (std::size_t lineno = 1; lineno <= rows.size(); ++lineno) {
        auto line = rows[lineno - 1];
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = csv::trim(line);
        if (body.empty()) continue;
        const auto where = fmt::format("line {}", lineno);
        if (body.front() == '[') {
            if (body.back() != ']') throw ParseError(fmt::format("{}: malformed section header", where));
            section = std::string(csv::trim(body.substr(1, body.size() - 2)));
            if (section != "scenario" && section != "kernel" && section != "selection" && section != "emission" &&
                section != "learning" && section != "demand") {
                throw ParseError(fmt::format("{}: unknown section [{}]", where, section));
            }
            continue;
        }
        if (section.empty()) throw ParseError(fmt::format("{}: entry outside any section", where));

        if (section == "demand") {
            const auto f = csv::split(body);
            if (f.size() != 6) throw ParseError(fmt::format("{}: demand row needs 6 fields", where));
            DemandEntry d;
            d.origin = csv::to_int(f[0], where + " origin");
            d.dest = csv::to_int(f[1], where + " dest");
            d.rate = csv::to_double(f[2], where + " rate");
            d.guided_fraction = csv::to_double(f[3], where + " guided_fraction");
            d.start = csv::to_int(f[4], where + " start");
            d.end = csv::to_int(f[5], where + " end");
            cfg.demand.push_back(d);
            continue;
        }

        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(fmt::format("{}: expected 'key = value'", where));
        const auto key = std::string(csv::trim(body.substr(0, eq)));
        const auto value = std::string(csv::trim(body.substr(eq + 1)));
        const auto what = fmt::format("{} [{}] {}", where, section, key);
        const auto unknown = [&] { return ParseError(fmt::format("{}: unknown key '{}' in [{}]", where, key, section)); };

        if (section == "scenario") {
            if (key == "network") {
                std::filesystem::path p(value);
                cfg.network_path = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
            } else if (key == "steps") {
                cfg.steps = csv::to_int(value, what);
            } else if (key == "warmup") {
                cfg.warmup = csv::to_int(value, what);
            } else if (key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(csv::to_int(value, what));
            } else if (key == "mode") {
                cfg.mode = parse_routing_mode(value);
            } else if (key == "strategy") {
                strategy = value;
            } else if (key == "gain") {
                gain = csv::to_double(value, what);
            } else if (key == "pretrip_only") {
                cfg.pretrip_only = parse_bool(value, what);
            } else if (key == "att_window") {
                cfg.att_window = csv::to_int(value, what);
            } else if (key == "convergence_window") {
                cfg.convergence.window = csv::to_int(value, what);
            } else if (key == "convergence_cv") {
                cfg.convergence.cv_threshold = csv::to_double(value, what);
            } else {
                throw unknown();
            }
        } else if (section == "kernel") {
            if (key == "type") {
                kernel_type = value;
            } else if (key == "dt" || key == "mt" || key == "ct" || key == "x_radius" || key == "mx" || key == "cx" ||
                       key == "v") {
                kernel_params[key] = csv::to_double(value, what);
            } else {
                throw unknown();
            }
        } else if (section == "selection") {
            if (key == "bias") {
                cfg.selection.bias = csv::to_double(value, what);
            } else if (key == "w_serv") {
                cfg.selection.w_serv = csv::to_double(value, what);
            } else if (key == "w_tra") {
                cfg.selection.w_tra = csv::to_double(value, what);
            } else if (key == "w_user") {
                cfg.selection.w_user = csv::to_double(value, what);
            } else if (key == "x_serv") {
                cfg.x_serv = csv::to_double(value, what);
            } else if (key == "x_user") {
                cfg.x_user = csv::to_double(value, what);
            } else {
                throw unknown();
            }
        } else if (section == "emission") {
            if (key == "period") {
                cfg.emission.period = csv::to_int(value, what);
            } else if (key == "f") {
                const double f = csv::to_double(value, what);
                if (!(f > 0.0)) throw ValidationError(fmt::format("{}: frequency must be > 0", what));
                cfg.emission.period = std::max<std::int64_t>(1, std::llround(1.0 / f));
            } else if (key == "change_threshold") {
                cfg.emission.change_threshold = csv::to_double(value, what);
            } else {
                throw unknown();
            }
        } else if (section == "learning") {
            if (key == "expire_epsilon") {
                cfg.learning.expire_epsilon = csv::to_double(value, what);
            } else if (key == "max_age") {
                cfg.learning.max_age = csv::to_int(value, what);
            } else {
                throw unknown();
            }
        }
    }

    if (cfg.network_path.empty()) throw ValidationError("[scenario] network is required");
    if (kernel_type.empty()) throw ValidationError("[kernel] type is required");
    cfg.kernel = make_kernel(parse_family(kernel_type), kernel_params);
    if (strategy == "min-perceived-cost") {
        cfg.strategy = reaction::MinPerceivedCost{};
    } else if (strategy == "equilibrium-feedback") {
        cfg.strategy = reaction::EquilibriumFeedback{gain};
    } else {
        throw ParseError(fmt::format("unknown strategy '{}'", strategy));
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_scenario(csv::read_file(path), base);
}

} // namespace guidesim
