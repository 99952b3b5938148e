#include "guidesim/cli.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/engine.hpp"
#include "guidesim/error.hpp"
#include "guidesim/experiments.hpp"
#include "guidesim/kernels.hpp"
#include "guidesim/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <fmt/format.h>

namespace guidesim::cli {

namespace fs = std::filesystem;

namespace {

struct KernelFlags {
    std::string type;
    std::map<std::string, double> params;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kernel", type, "kernel family (zero, global-gap, natural-global, local-gap, "
                                          "natural-local, natural-spacetime)");
        for (const char* key : {"dt", "mt", "ct", "x_radius", "mx", "cx", "v"}) {
            cmd->add_option_function<double>(
                fmt::format("--{}", key), [this, key](double value) { params[key] = value; },
                fmt::format("kernel parameter {}", key));
        }
    }

    bool given() const { return !type.empty(); }
    KernelSpec spec() const {
        if (type.empty() && !params.empty()) throw ValidationError("kernel parameters given without --kernel");
        return make_kernel(parse_family(type), params);
    }
};

struct DomainFlags {
    Domain2D dom;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--x-max", dom.x_max, "integration extent in distance")->capture_default_str();
        cmd->add_option("--t-max", dom.t_max, "integration extent in steps")->capture_default_str();
        cmd->add_option("--dx", dom.dx, "grid spacing in distance")->capture_default_str();
        cmd->add_option("--dt-grid", dom.dt_grid, "grid spacing in steps")->capture_default_str();
    }
};

void ensure_out(const std::string& out) { fs::create_directories(out); }

std::string out_file(const std::string& out, std::string_view name) { return (fs::path(out) / name).string(); }

std::vector<GridAxisSpec> parse_grid(std::string_view text) {
    std::vector<GridAxisSpec> grid;
    for (const auto& part : csv::split(text, ';')) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ParseError(fmt::format("grid axis '{}' lacks '='", part));
        GridAxisSpec axis{std::string(csv::trim(std::string_view(part).substr(0, eq))), {}};
        for (const auto& v : csv::split(std::string_view(part).substr(eq + 1))) {
            axis.values.push_back(csv::to_double(v, axis.name));
        }
        grid.push_back(std::move(axis));
    }
    if (grid.empty()) throw ParseError("empty grid");
    return grid;
}

std::vector<ParameterBound> parse_bounds(std::string_view text) {
    std::vector<ParameterBound> bounds;
    for (const auto& part : csv::split(text, ';')) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        const auto colon = part.find(':');
        if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
            throw ParseError(fmt::format("bound '{}' must look like name=lo:hi", part));
        }
        const std::string_view p(part);
        bounds.push_back({std::string(csv::trim(p.substr(0, eq))), csv::to_double(p.substr(eq + 1, colon - eq - 1), "lo"),
                          csv::to_double(p.substr(colon + 1), "hi")});
    }
    if (bounds.empty()) throw ParseError("empty bounds");
    return bounds;
}

std::map<std::string, double> parse_assignments(std::string_view text) {
    std::map<std::string, double> out;
    for (const auto& part : csv::split(text)) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ParseError(fmt::format("'{}' must look like name=value", part));
        const std::string_view p(part);
        out[std::string(csv::trim(p.substr(0, eq)))] = csv::to_double(p.substr(eq + 1), part);
    }
    return out;
}

struct TimeSeriesColumns {
    std::vector<std::string> steps;
    std::vector<std::string> att;
};

TimeSeriesColumns read_att_column(const std::string& dir) {
    const auto path = (fs::path(dir) / "timeseries.csv").string();
    if (!fs::exists(path)) throw ValidationError(fmt::format("missing {}", path));
    const auto rows = csv::lines(csv::read_file(path));
    if (rows.empty()) throw ValidationError(fmt::format("{} is empty", path));
    const auto header = csv::split(rows.front());
    if (header.size() < 2 || header[0] != "step" || header[1] != "att_window") {
        throw ValidationError(fmt::format("{}: header must start with step,att_window", path));
    }
    TimeSeriesColumns cols;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (csv::trim(rows[i]).empty()) continue;
        const auto f = csv::split(rows[i]);
        if (f.size() != header.size()) throw ValidationError(fmt::format("{}: row {} has wrong field count", path, i + 1));
        csv::to_int(f[0], path + " step");
        cols.steps.push_back(f[0]);
        cols.att.push_back(f[1] == "nan" ? f[1] : csv::real(csv::to_double(f[1], path + " att_window")));
    }
    return cols;
}

std::string dir_label(const std::string& dir) {
    auto p = fs::path(dir);
    if (!p.has_filename()) p = p.parent_path();
    return p.filename().string();
}

} // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : csv::split(text)) {
        if (part.empty()) continue;
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            seeds.push_back(static_cast<std::uint64_t>(csv::to_int(part, "seed")));
            continue;
        }
        const auto lo = csv::to_int(std::string_view(part).substr(0, dash), "seed range");
        const auto hi = csv::to_int(std::string_view(part).substr(dash + 1), "seed range");
        if (lo > hi || lo < 0) throw ParseError(fmt::format("bad seed range '{}'", part));
        for (auto s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (seeds.empty()) throw ParseError("no seeds given");
    return seeds;
}

void emit_plot_data(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                    const std::string& kernel_text, double x_max, double t_max, int nx, int nt) {
    if (run_dirs.empty()) throw ValidationError("plot-data needs at least one run directory");
    if (nx < 2 || nt < 2 || !(x_max > 0.0) || !(t_max > 0.0)) throw ValidationError("heatmap grid needs >= 2 points per axis");
    std::vector<TimeSeriesColumns> series;
    std::size_t rows = std::numeric_limits<std::size_t>::max();
    for (const auto& dir : run_dirs) {
        series.push_back(read_att_column(dir));
        rows = std::min(rows, series.back().steps.size());
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].steps.size() != rows) {
            std::cerr << fmt::format("warning: {} has {} rows; truncating all runs to {}\n", run_dirs[i],
                                     series[i].steps.size(), rows);
        }
    }

    KernelSpec kernel{kernel::Zero{}, std::nullopt};
    if (!kernel_text.empty()) {
        kernel = parse_kernel(kernel_text);
    } else {
        const auto path = (fs::path(run_dirs.front()) / "kernel.txt").string();
        if (!fs::exists(path)) throw ValidationError(fmt::format("missing {}", path));
        kernel = parse_kernel(csv::read_file(path));
    }

    ensure_out(out_dir);
    std::string att = "step";
    for (const auto& dir : run_dirs) att += "," + dir_label(dir);
    att += "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        att += series.front().steps[r];
        for (const auto& s : series) att += "," + s.att[r];
        att += "\n";
    }
    csv::write_file(out_file(out_dir, "att_compare.csv"), att);

    std::string heat = "x,t,p\n";
    for (int i = 0; i < nx; ++i) {
        const double x = x_max * i / (nx - 1);
        for (int j = 0; j < nt; ++j) {
            const double t = t_max * j / (nt - 1);
            heat += fmt::format("{},{},{}\n", csv::real(x), csv::real(t), csv::real(eval(kernel, x, t)));
        }
    }
    csv::write_file(out_file(out_dir, "kernel_heatmap.csv"), heat);
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Agent-based route guidance simulator with distributive cost learning"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t jobs = 1;
    app.add_option("--jobs", jobs, "maximum worker threads for sweeps and optimization")->capture_default_str();

    // run
    auto* run_cmd = app.add_subcommand("run", "simulate a scenario");
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed_override;
    run_cmd->add_option("--scenario", scenario, "scenario file")->required();
    run_cmd->add_option("--out", out, "output directory")->required();
    run_cmd->add_option("--seed", seed_override, "override the scenario seed");

    // check-kernel
    auto* check_cmd = app.add_subcommand("check-kernel", "principle report for one kernel");
    KernelFlags check_kernel;
    check_kernel.add_to(check_cmd);
    std::string reference = "natural-spacetime:cx=1,ct=1";
    DomainFlags check_domain;
    check_cmd->add_option("--scenario", scenario, "take the kernel from this scenario");
    check_cmd->add_option("--reference", reference, "reference influence kernel, family:key=value,...")
        ->capture_default_str();
    check_domain.add_to(check_cmd);
    check_cmd->add_option("--out", out, "output directory")->required();

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "equivalence trial between two kernels");
    std::string kernel_a;
    std::string kernel_b;
    std::string match_param;
    std::string seeds_text = "1-10";
    bool allow_divergent = false;
    DomainFlags compare_domain;
    compare_cmd->add_option("--scenario", scenario, "scenario file")->required();
    compare_cmd->add_option("--kernel-a", kernel_a, "first kernel, family:key=value,...")->required();
    compare_cmd->add_option("--kernel-b", kernel_b, "second kernel, family:key=value,...")->required();
    compare_cmd->add_option("--match", match_param,
                            "solve this scale parameter of kernel b so its integral equals kernel a's");
    compare_cmd->add_option("--seeds", seeds_text, "seed list, e.g. 1-10 or 1,4,9")->capture_default_str();
    compare_cmd->add_flag("--allow-divergent", allow_divergent, "permit kernels with unbounded spatial influence");
    compare_domain.add_to(compare_cmd);
    compare_cmd->add_option("--out", out, "output directory")->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep over one kernel family");
    std::string family;
    std::string grid_text;
    sweep_cmd->add_option("--scenario", scenario, "scenario file")->required();
    sweep_cmd->add_option("--family", family, "kernel family")->required();
    sweep_cmd->add_option("--grid", grid_text, "axes, e.g. 'ct=1,5,25;cx=2,4'")->required();
    sweep_cmd->add_option("--seeds", seeds_text, "seed list")->capture_default_str();
    sweep_cmd->add_option("--out", out, "output directory")->required();

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "optimize kernel parameters against ATT");
    std::string bounds_text;
    std::string fixed_text;
    std::size_t budget = 60;
    std::size_t grid_points = 0;
    opt_cmd->add_option("--scenario", scenario, "scenario file")->required();
    opt_cmd->add_option("--family", family, "kernel family")->required();
    opt_cmd->add_option("--bounds", bounds_text, "box, e.g. 'cx=0.5:20;ct=0.5:20'")->required();
    opt_cmd->add_option("--fix", fixed_text, "fixed parameters, e.g. 'mx=2,mt=2'");
    opt_cmd->add_option("--budget", budget, "simulation evaluations")->capture_default_str();
    opt_cmd->add_option("--grid-points", grid_points, "lattice size (default budget/2)");
    opt_cmd->add_option("--seeds", seeds_text, "seed list")->capture_default_str();
    opt_cmd->add_option("--out", out, "output directory")->required();

    // plot-data
    auto* plot_cmd = app.add_subcommand("plot-data", "consolidate run outputs into plot-ready CSVs");
    std::vector<std::string> run_dirs;
    std::string heat_kernel;
    double heat_x_max = 50.0;
    double heat_t_max = 50.0;
    int heat_nx = 51;
    int heat_nt = 51;
    plot_cmd->add_option("--runs", run_dirs, "run directories")->required();
    plot_cmd->add_option("--kernel-spec", heat_kernel, "heatmap kernel (default: first run's kernel.txt)");
    plot_cmd->add_option("--x-max", heat_x_max)->capture_default_str();
    plot_cmd->add_option("--t-max", heat_t_max)->capture_default_str();
    plot_cmd->add_option("--nx", heat_nx)->capture_default_str();
    plot_cmd->add_option("--nt", heat_nt)->capture_default_str();
    plot_cmd->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cerr << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*run_cmd) {
            auto cfg = load_scenario(scenario);
            if (seed_override) cfg.seed = *seed_override;
            const auto result = run(cfg);
            for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
            ensure_out(out);
            csv::write_file(out_file(out, "metrics.csv"), metrics_csv(result.metrics));
            csv::write_file(out_file(out, "timeseries.csv"), timeseries_csv(result.series));
            csv::write_file(out_file(out, "kernel.txt"), to_string(cfg.kernel) + "\n");
        } else if (*check_cmd) {
            if (scenario.empty() == !check_kernel.given()) {
                throw ValidationError("check-kernel needs exactly one of --scenario or --kernel");
            }
            const auto k = check_kernel.given() ? check_kernel.spec() : load_scenario(scenario).kernel;
            const auto report = check_principles(k, parse_kernel(reference), check_domain.dom);
            ensure_out(out);
            csv::write_file(out_file(out, "kernel_report.csv"),
                            fmt::format("kernel,principle1,integral,phase_distance_to_reference\n{},{},{},{}\n",
                                        family_name(k.family()), to_string(report.principle1),
                                        csv::real(report.principle1_integral),
                                        csv::real(report.principle2_distance)));
        } else if (*compare_cmd) {
            const auto cfg = load_scenario(scenario);
            const auto net = load_network_file(cfg.network_path);
            const auto a = parse_kernel(kernel_a);
            auto b = parse_kernel(kernel_b);
            if (!match_param.empty()) {
                std::map<std::string, double> fixed;
                for (const auto& name : parameter_names(b.family())) {
                    if (name != match_param) fixed[name] = get_parameter(b, name);
                }
                if (b.velocity) fixed["v"] = *b.velocity;
                b = match_integral(b.family(), fixed, total_influence(a, compare_domain.dom), compare_domain.dom);
            }
            const auto report = equivalence_trial(cfg, net, a, b, parse_seeds(seeds_text), compare_domain.dom,
                                                  allow_divergent, jobs);
            ensure_out(out);
            csv::write_file(out_file(out, "equivalence.csv"), equivalence_csv(report));
            csv::write_file(out_file(out, "kernels.txt"), to_string(a) + "\n" + to_string(b) + "\n");
        } else if (*sweep_cmd) {
            const auto cfg = load_scenario(scenario);
            const auto net = load_network_file(cfg.network_path);
            const auto table = sweep(cfg, net, parse_family(family), parse_grid(grid_text), parse_seeds(seeds_text), jobs);
            for (const auto& row : table.rows) {
                if (!row.error.empty()) std::cerr << "warning: grid point failed: " << row.error << "\n";
            }
            ensure_out(out);
            csv::write_file(out_file(out, "sweep.csv"), sweep_csv(table));
        } else if (*opt_cmd) {
            auto cfg = load_scenario(scenario);
            const auto net = load_network_file(cfg.network_path);
            const auto fam = parse_family(family);
            const auto fixed = parse_assignments(fixed_text);
            if (!fixed.empty() || cfg.kernel.family() != fam) {
                auto k = cfg.kernel.family() == fam ? cfg.kernel : make_kernel(fam, {});
                for (const auto& [name, value] : fixed) set_parameter(k, name, value);
                validate(k);
                cfg.kernel = k;
            }
            const auto result = optimize(cfg, net, fam, parse_bounds(bounds_text), budget, parse_seeds(seeds_text),
                                         OptimizeOptions{grid_points, jobs});
            ensure_out(out);
            csv::write_file(out_file(out, "optimize.csv"), optimize_csv(result));
        } else if (*plot_cmd) {
            emit_plot_data(run_dirs, out, heat_kernel, heat_x_max, heat_t_max, heat_nx, heat_nt);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}

} // namespace guidesim::cli
