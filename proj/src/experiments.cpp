#include "guidesim/experiments.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace guidesim {

namespace {

constexpr double kMatchTolerance = 0.005;
// Bisection aims well inside the acceptance tolerance.
constexpr double kMatchAim = 1e-4;
constexpr double kDivergencePenalty = 10.0;

KernelSpec base_kernel(const ScenarioConfig& base, KernelFamily family) {
    if (base.kernel.family() == family) return base.kernel;
    return make_kernel(family, {});
}

KernelSpec with_params(KernelSpec k, const std::vector<std::string>& names, const std::vector<double>& values) {
    for (std::size_t i = 0; i < names.size(); ++i) set_parameter(k, names[i], values[i]);
    validate(k);
    return k;
}

double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

std::size_t nth_prime(std::size_t n) {
    static constexpr std::size_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    return primes[n % std::size(primes)];
}

} // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

SeedAverage evaluate_kernel(const ScenarioConfig& base, const Network& net, const KernelSpec& k,
                            const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (seeds.empty()) throw ValidationError("at least one seed is required");
    validate(k);
    SeedAverage avg;
    avg.per_seed.resize(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        auto cfg = base;
        cfg.kernel = k;
        cfg.seed = seeds[i];
        const auto result = run(cfg, net);
        avg.per_seed[i] = {result.metrics.att, result.metrics.oscillation_index};
    });
    const auto n = static_cast<double>(seeds.size());
    for (const auto& s : avg.per_seed) {
        avg.mean_att += s.att / n;
        avg.mean_oscillation += s.oscillation / n;
    }
    if (seeds.size() > 1) {
        double sq = 0.0;
        for (const auto& s : avg.per_seed) sq += (s.att - avg.mean_att) * (s.att - avg.mean_att);
        avg.std_att = std::sqrt(sq / (n - 1.0));
    }
    return avg;
}

bool is_scale_parameter(std::string_view name) {
    return name == "dt" || name == "ct" || name == "cx" || name == "x_radius";
}

KernelSpec match_integral(KernelFamily family, const std::map<std::string, double>& fixed, double target,
                          const Domain2D& dom) {
    validate(dom);
    if (!(target > 0.0) || !std::isfinite(target)) throw ValidationError("match_integral target must be > 0");
    std::vector<std::string> free;
    for (const auto& name : parameter_names(family)) {
        if (is_scale_parameter(name) && !fixed.contains(name)) free.push_back(name);
    }
    if (free.size() != 1) {
        throw ValidationError(fmt::format("{} needs exactly one free scale parameter, found {}", family_name(family),
                                          free.size()));
    }
    const auto& name = free.front();
    auto spec = make_kernel(family, fixed);

    const bool temporal = name == "dt" || name == "ct";
    const double extent = temporal ? dom.t_max : dom.x_max;
    // Window parameters saturate at the domain edge; decay scales keep growing slowly beyond it.
    double lo = 1e-6 * extent;
    double hi = (name == "dt" || name == "x_radius") ? extent : 1e3 * extent;

    const auto influence = [&](double value) {
        set_parameter(spec, name, value);
        return total_influence(spec, dom);
    };
    const double i_lo = influence(lo);
    const double i_hi = influence(hi);
    if (target < i_lo * (1.0 - kMatchTolerance) || target > i_hi * (1.0 + kMatchTolerance)) {
        throw ValidationError(fmt::format("target influence {} unreachable: {} in [{}, {}] gives [{}, {}]", target, name,
                                          lo, hi, i_lo, i_hi));
    }
    double best_value = 0.0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double value = influence(mid);
        const double err = std::abs(value - target) / target;
        if (err < best_err) {
            best_err = err;
            best_value = mid;
        }
        if (err < kMatchAim) return spec;
        (value < target ? lo : hi) = mid;
    }
    if (best_err < kMatchTolerance) {
        set_parameter(spec, name, best_value);
        return spec;
    }
    throw ValidationError(fmt::format("target influence {} not matched within {}% by {}", target,
                                      100.0 * kMatchTolerance, name));
}

EquivalenceReport equivalence_trial(const ScenarioConfig& base, const Network& net, const KernelSpec& k1,
                                    const KernelSpec& k2, const std::vector<std::uint64_t>& seeds,
                                    const Domain2D& dom, bool allow_divergent, std::size_t jobs) {
    if (seeds.empty()) throw ValidationError("equivalence_trial needs at least one seed");
    if (!allow_divergent && (diverges_in_space(k1) || diverges_in_space(k2))) {
        throw ValidationError("equivalence_trial: kernel with unbounded spatial influence (set the override to allow)");
    }
    EquivalenceReport r;
    r.integral_1 = total_influence(k1, dom);
    r.integral_2 = total_influence(k2, dom);
    const double imax = std::max(r.integral_1, r.integral_2);
    r.integral_rel_diff = imax > 0.0 ? std::abs(r.integral_1 - r.integral_2) / imax : 0.0;
    const auto a = evaluate_kernel(base, net, k1, seeds, jobs);
    const auto b = evaluate_kernel(base, net, k2, seeds, jobs);
    r.eta_1 = a.mean_att;
    r.eta_2 = b.mean_att;
    const double mean = 0.5 * (r.eta_1 + r.eta_2);
    r.eta_rel_diff = r.eta_1 == r.eta_2 ? 0.0 : (r.eta_1 - r.eta_2) / mean;
    r.oscillation_1 = a.mean_oscillation;
    r.oscillation_2 = b.mean_oscillation;
    r.phase_distance = phase_distance(k1, k2, dom);
    r.seeds_used = seeds.size();
    return r;
}

SweepTable sweep(const ScenarioConfig& base, const Network& net, KernelFamily family,
                 const std::vector<GridAxisSpec>& grid, const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (grid.empty()) throw ValidationError("sweep grid is empty");
    if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
    SweepTable table;
    std::size_t points = 1;
    for (const auto& axis : grid) {
        if (axis.values.empty()) throw ValidationError(fmt::format("sweep axis '{}' has no values", axis.name));
        table.names.push_back(axis.name);
        points *= axis.values.size();
    }
    const auto kernel0 = base_kernel(base, family);
    table.rows.resize(points);
    for (std::size_t p = 0; p < points; ++p) {
        auto rest = p;
        auto& row = table.rows[p];
        row.params.resize(grid.size());
        for (std::size_t d = grid.size(); d-- > 0;) {
            row.params[d] = grid[d].values[rest % grid[d].values.size()];
            rest /= grid[d].values.size();
        }
    }
    // Grid points run one after another; the seeds of each point fan out.
    for (auto& row : table.rows) {
        try {
            const auto k = with_params(kernel0, table.names, row.params);
            const auto avg = evaluate_kernel(base, net, k, seeds, jobs);
            row.mean_att = avg.mean_att;
            row.std_att = avg.std_att;
            row.mean_oscillation = avg.mean_oscillation;
            if (std::isnan(row.mean_att)) row.error = "no completed trips";
        } catch (const std::exception& e) {
            row.error = e.what();
            row.mean_att = std::numeric_limits<double>::quiet_NaN();
        }
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        const bool fa = !a.error.empty();
        const bool fb = !b.error.empty();
        if (fa != fb) return fb;
        if (fa) return false;
        return a.mean_att < b.mean_att;
    });
    return table;
}

OptimizationResult optimize(const ScenarioConfig& base, const Network& net, KernelFamily family,
                            const std::vector<ParameterBound>& bounds, std::size_t budget,
                            const std::vector<std::uint64_t>& seeds, const OptimizeOptions& options) {
    if (budget < 10) throw ValidationError("optimize budget must be >= 10");
    if (bounds.empty()) throw ValidationError("optimize needs at least one bounded parameter");
    if (seeds.empty()) throw ValidationError("optimize needs at least one seed");
    for (const auto& b : bounds) {
        if (!(b.lo <= b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
            throw ValidationError(fmt::format("invalid bounds for '{}'", b.name));
        }
    }
    const auto kernel0 = base_kernel(base, family);
    OptimizationResult result;
    result.family = family;
    for (const auto& b : bounds) result.names.push_back(b.name);
    // Reject unknown names and out-of-bounds boxes before spending budget.
    with_params(kernel0, result.names, [&] {
        std::vector<double> lo;
        for (const auto& b : bounds) lo.push_back(b.lo);
        return lo;
    }());

    const auto dims = bounds.size();
    const auto clamp = [&](std::vector<double> x) {
        for (std::size_t d = 0; d < dims; ++d) x[d] = std::clamp(x[d], bounds[d].lo, bounds[d].hi);
        return x;
    };

    std::map<std::vector<double>, double> cache;
    const auto record = [&](const std::vector<double>& x, double eta) {
        cache.emplace(x, eta);
        result.trace.push_back({x, eta});
        if (result.trace.size() == 1 || eta < result.best_eta) {
            result.best_eta = eta;
            result.best_params = x;
        }
    };
    const auto objective = [&](const std::vector<double>& x) {
        const auto k = with_params(kernel0, result.names, x);
        const auto avg = evaluate_kernel(base, net, k, seeds, options.jobs);
        double eta = std::isnan(avg.mean_att) ? std::numeric_limits<double>::infinity() : avg.mean_att;
        if (diverges_in_space(k)) eta += kDivergencePenalty * eta;
        return eta;
    };
    // Returns the cached value, or evaluates when budget remains; nullopt once exhausted.
    const auto evaluate = [&](const std::vector<double>& raw) -> std::optional<double> {
        const auto x = clamp(raw);
        if (const auto it = cache.find(x); it != cache.end()) return it->second;
        if (result.trace.size() >= budget) return std::nullopt;
        const double eta = objective(x);
        record(x, eta);
        return eta;
    };

    // Coarse stage: Halton lattice, evaluated in parallel.
    const std::size_t grid_points = std::min(budget, options.grid_points ? options.grid_points : (budget + 1) / 2);
    std::vector<std::vector<double>> lattice(grid_points, std::vector<double>(dims));
    for (std::size_t i = 0; i < grid_points; ++i) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double u = radical_inverse(i + 1, nth_prime(d));
            lattice[i][d] = bounds[d].lo + u * (bounds[d].hi - bounds[d].lo);
        }
    }
    std::vector<double> lattice_eta(grid_points);
    parallel_for(grid_points, options.jobs, [&](std::size_t i) {
        const auto k = with_params(kernel0, result.names, lattice[i]);
        const auto avg = evaluate_kernel(base, net, k, seeds, 1);
        double eta = std::isnan(avg.mean_att) ? std::numeric_limits<double>::infinity() : avg.mean_att;
        if (diverges_in_space(k)) eta += kDivergencePenalty * eta;
        lattice_eta[i] = eta;
    });
    for (std::size_t i = 0; i < grid_points; ++i) {
        if (!cache.contains(lattice[i])) record(lattice[i], lattice_eta[i]);
    }

    // Refinement: Nelder-Mead from the best lattice point.
    if (result.trace.size() < budget) {
        std::vector<std::vector<double>> simplex{result.best_params};
        std::vector<double> values{result.best_eta};
        bool exhausted = false;
        for (std::size_t d = 0; d < dims && !exhausted; ++d) {
            auto x = result.best_params;
            const double step = 0.1 * (bounds[d].hi - bounds[d].lo);
            x[d] = x[d] + step <= bounds[d].hi ? x[d] + step : x[d] - step;
            x = clamp(x);
            const auto v = evaluate(x);
            if (!v) exhausted = true;
            simplex.push_back(x);
            values.push_back(v.value_or(std::numeric_limits<double>::infinity()));
        }

        const auto sort_simplex = [&] {
            std::vector<std::size_t> order(simplex.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            std::vector<std::vector<double>> s;
            std::vector<double> v;
            for (const auto i : order) {
                s.push_back(simplex[i]);
                v.push_back(values[i]);
            }
            simplex.swap(s);
            values.swap(v);
        };
        const auto blend = [&](const std::vector<double>& from, const std::vector<double>& to, double t) {
            std::vector<double> x(dims);
            for (std::size_t d = 0; d < dims; ++d) x[d] = from[d] + t * (to[d] - from[d]);
            return clamp(x);
        };

        for (std::size_t iter = 0; !exhausted && iter < 20 * budget; ++iter) {
            sort_simplex();
            double span = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
                const double width = bounds[d].hi - bounds[d].lo;
                if (width <= 0.0) continue;
                for (const auto& x : simplex) span = std::max(span, std::abs(x[d] - simplex[0][d]) / width);
            }
            if (span < 1e-6) break;

            std::vector<double> centroid(dims, 0.0);
            for (std::size_t i = 0; i < dims; ++i) {
                for (std::size_t d = 0; d < dims; ++d) centroid[d] += simplex[i][d] / static_cast<double>(dims);
            }
            const auto& worst = simplex[dims];
            const auto reflected = blend(centroid, worst, -1.0);
            const auto fr = evaluate(reflected);
            if (!fr) break;
            if (*fr < values[0]) {
                const auto expanded = blend(centroid, worst, -2.0);
                const auto fe = evaluate(expanded);
                if (!fe) break;
                if (*fe < *fr) {
                    simplex[dims] = expanded;
                    values[dims] = *fe;
                } else {
                    simplex[dims] = reflected;
                    values[dims] = *fr;
                }
                continue;
            }
            if (*fr < values[dims - 1]) {
                simplex[dims] = reflected;
                values[dims] = *fr;
                continue;
            }
            const bool outside = *fr < values[dims];
            const auto contracted = outside ? blend(centroid, reflected, 0.5) : blend(centroid, worst, 0.5);
            const auto fc = evaluate(contracted);
            if (!fc) break;
            if (*fc < (outside ? *fr : values[dims])) {
                simplex[dims] = contracted;
                values[dims] = *fc;
                continue;
            }
            for (std::size_t i = 1; i <= dims && !exhausted; ++i) {
                simplex[i] = blend(simplex[0], simplex[i], 0.5);
                const auto v = evaluate(simplex[i]);
                if (!v) exhausted = true;
                values[i] = v.value_or(std::numeric_limits<double>::infinity());
            }
        }
    }
    result.evaluations = result.trace.size();
    return result;
}

std::string sweep_csv(const SweepTable& table) {
    std::string out;
    for (const auto& n : table.names) out += n + ",";
    out += "mean_att,std_att,mean_oscillation\n";
    for (const auto& row : table.rows) {
        for (const auto p : row.params) out += csv::real(p) + ",";
        out += fmt::format("{},{},{}\n", csv::real(row.mean_att), csv::real(row.std_att),
                           csv::real(row.mean_oscillation));
    }
    return out;
}

std::string optimize_csv(const OptimizationResult& result) {
    std::string out = "eval";
    for (const auto& n : result.names) out += "," + n;
    out += ",eta\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        out += std::to_string(i + 1);
        for (const auto p : result.trace[i].params) out += "," + csv::real(p);
        out += "," + csv::real(result.trace[i].eta) + "\n";
    }
    return out;
}

std::string equivalence_csv(const EquivalenceReport& r) {
    std::string out = "integral_1,integral_2,integral_rel_diff,eta_1,eta_2,eta_rel_diff,phase_distance,"
                      "oscillation_1,oscillation_2,seeds_used\n";
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv::real(r.integral_1), csv::real(r.integral_2),
                       csv::real(r.integral_rel_diff), csv::real(r.eta_1), csv::real(r.eta_2),
                       csv::real(r.eta_rel_diff), csv::real(r.phase_distance), csv::real(r.oscillation_1),
                       csv::real(r.oscillation_2), r.seeds_used);
    return out;
}

} // namespace guidesim
