#include "guidesim/kernels.hpp"

#include "guidesim/csv.hpp"
#include "guidesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace guidesim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double temporal_decay(double base, double scale, double t) { return std::pow(base, -t / scale); }

void require(bool ok, std::string_view what) {
    if (!ok) throw ValidationError(fmt::format("kernel parameter out of bounds: {}", what));
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }
bool base_ok(double v) { return v > 1.0 && std::isfinite(v); }

struct GridAxis {
    std::size_t cells;
    double width;
};

GridAxis axis(double extent, double spacing) {
    const auto cells = std::max<long long>(1, std::llround(extent / spacing));
    return {static_cast<std::size_t>(cells), extent / static_cast<double>(cells)};
}

double* parameter_slot(KernelSpec& k, std::string_view name) {
    return std::visit(
        overloaded{
            [&](kernel::Zero&) -> double* { return nullptr; },
            [&](kernel::GlobalGap& g) -> double* { return name == "dt" ? &g.dt : nullptr; },
            [&](kernel::NaturalGlobal& g) -> double* {
                if (name == "mt") return &g.mt;
                if (name == "ct") return &g.ct;
                return nullptr;
            },
            [&](kernel::LocalGap& g) -> double* {
                if (name == "x_radius") return &g.x_radius;
                if (name == "dt") return &g.dt;
                return nullptr;
            },
            [&](kernel::NaturalLocal& g) -> double* {
                if (name == "x_radius") return &g.x_radius;
                if (name == "mt") return &g.mt;
                if (name == "ct") return &g.ct;
                return nullptr;
            },
            [&](kernel::NaturalSpaceTime& g) -> double* {
                if (name == "mx") return &g.mx;
                if (name == "cx") return &g.cx;
                if (name == "mt") return &g.mt;
                if (name == "ct") return &g.ct;
                return nullptr;
            },
        },
        k.shape);
}

KernelShape default_shape(KernelFamily f) {
    switch (f) {
    case KernelFamily::Zero: return kernel::Zero{};
    case KernelFamily::GlobalGap: return kernel::GlobalGap{};
    case KernelFamily::NaturalGlobal: return kernel::NaturalGlobal{};
    case KernelFamily::LocalGap: return kernel::LocalGap{};
    case KernelFamily::NaturalLocal: return kernel::NaturalLocal{};
    case KernelFamily::NaturalSpaceTime: return kernel::NaturalSpaceTime{};
    }
    return kernel::Zero{};
}

} // namespace

KernelFamily KernelSpec::family() const { return static_cast<KernelFamily>(shape.index()); }

void validate(const KernelSpec& k) {
    std::visit(overloaded{
                   [](const kernel::Zero&) {},
                   [](const kernel::GlobalGap& g) { require(positive(g.dt), "dt > 0"); },
                   [](const kernel::NaturalGlobal& g) {
                       require(base_ok(g.mt), "mt > 1");
                       require(positive(g.ct), "ct > 0");
                   },
                   [](const kernel::LocalGap& g) {
                       require(positive(g.x_radius), "x_radius > 0");
                       require(positive(g.dt), "dt > 0");
                   },
                   [](const kernel::NaturalLocal& g) {
                       require(positive(g.x_radius), "x_radius > 0");
                       require(base_ok(g.mt), "mt > 1");
                       require(positive(g.ct), "ct > 0");
                   },
                   [](const kernel::NaturalSpaceTime& g) {
                       require(base_ok(g.mx), "mx > 1");
                       require(positive(g.cx), "cx > 0");
                       require(base_ok(g.mt), "mt > 1");
                       require(positive(g.ct), "ct > 0");
                   },
               },
               k.shape);
    if (k.velocity) require(positive(*k.velocity), "v > 0");
}

std::string_view family_name(KernelFamily f) {
    switch (f) {
    case KernelFamily::Zero: return "zero";
    case KernelFamily::GlobalGap: return "global-gap";
    case KernelFamily::NaturalGlobal: return "natural-global";
    case KernelFamily::LocalGap: return "local-gap";
    case KernelFamily::NaturalLocal: return "natural-local";
    case KernelFamily::NaturalSpaceTime: return "natural-spacetime";
    }
    return "?";
}

KernelFamily parse_family(std::string_view name) {
    for (const auto f : {KernelFamily::Zero, KernelFamily::GlobalGap, KernelFamily::NaturalGlobal, KernelFamily::LocalGap,
                         KernelFamily::NaturalLocal, KernelFamily::NaturalSpaceTime}) {
        if (family_name(f) == name) return f;
    }
    throw ParseError(fmt::format("unknown kernel family '{}'", name));
}

const std::vector<std::string>& parameter_names(KernelFamily f) {
    static const std::vector<std::string> zero{};
    static const std::vector<std::string> global_gap{"dt"};
    static const std::vector<std::string> natural_global{"mt", "ct"};
    static const std::vector<std::string> local_gap{"x_radius", "dt"};
    static const std::vector<std::string> natural_local{"x_radius", "mt", "ct"};
    static const std::vector<std::string> spacetime{"mx", "cx", "mt", "ct"};
    switch (f) {
    case KernelFamily::Zero: return zero;
    case KernelFamily::GlobalGap: return global_gap;
    case KernelFamily::NaturalGlobal: return natural_global;
    case KernelFamily::LocalGap: return local_gap;
    case KernelFamily::NaturalLocal: return natural_local;
    case KernelFamily::NaturalSpaceTime: return spacetime;
    }
    return zero;
}

double get_parameter(const KernelSpec& k, std::string_view name) {
    if (name == "v") {
        if (!k.velocity) throw ValidationError("kernel has no velocity");
        return *k.velocity;
    }
    auto copy = k;
    const double* slot = parameter_slot(copy, name);
    if (slot == nullptr) {
        throw ValidationError(fmt::format("{} has no parameter '{}'", family_name(k.family()), name));
    }
    return *slot;
}

void set_parameter(KernelSpec& k, std::string_view name, double value) {
    if (name == "v") {
        k.velocity = value;
        return;
    }
    double* slot = parameter_slot(k, name);
    if (slot == nullptr) {
        throw ValidationError(fmt::format("{} has no parameter '{}'", family_name(k.family()), name));
    }
    *slot = value;
}

KernelSpec make_kernel(KernelFamily f, const std::map<std::string, double>& params) {
    KernelSpec k{default_shape(f), std::nullopt};
    for (const auto& [name, value] : params) set_parameter(k, name, value);
    validate(k);
    return k;
}

KernelSpec parse_kernel(std::string_view text) {
    text = csv::trim(text);
    const auto colon = text.find(':');
    const auto family = parse_family(csv::trim(text.substr(0, colon)));
    std::map<std::string, double> params;
    if (colon != std::string_view::npos) {
        for (const auto& item : csv::split(text.substr(colon + 1))) {
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ParseError(fmt::format("kernel parameter '{}' lacks '='", item));
            const auto key = std::string(csv::trim(std::string_view(item).substr(0, eq)));
            params[key] = csv::to_double(std::string_view(item).substr(eq + 1), key);
        }
    }
    return make_kernel(family, params);
}

std::string to_string(const KernelSpec& k) {
    std::string out(family_name(k.family()));
    char sep = ':';
    for (const auto& name : parameter_names(k.family())) {
        out += fmt::format("{}{}={}", sep, name, get_parameter(k, name));
        sep = ',';
    }
    if (k.velocity) out += fmt::format("{}v={}", sep, *k.velocity);
    return out;
}

namespace {

/// Every family factors as spatial(x) * temporal(t) before arrival gating.
double spatial_factor(const KernelSpec& k, double x) {
    return std::visit(overloaded{
                          [](const kernel::Zero&) { return 0.0; },
                          [](const kernel::GlobalGap&) { return 1.0; },
                          [](const kernel::NaturalGlobal&) { return 1.0; },
                          [&](const kernel::LocalGap& g) { return x <= g.x_radius ? 1.0 : 0.0; },
                          [&](const kernel::NaturalLocal& g) { return x <= g.x_radius ? 1.0 : 0.0; },
                          [&](const kernel::NaturalSpaceTime& g) { return temporal_decay(g.mx, g.cx, x); },
                      },
                      k.shape);
}

double temporal_factor(const KernelSpec& k, double t) {
    return std::visit(overloaded{
                          [](const kernel::Zero&) { return 0.0; },
                          [&](const kernel::GlobalGap& g) { return (t >= 0.0 && t < g.dt) ? 1.0 : 0.0; },
                          [&](const kernel::NaturalGlobal& g) { return temporal_decay(g.mt, g.ct, t); },
                          [&](const kernel::LocalGap& g) { return (t >= 0.0 && t < g.dt) ? 1.0 : 0.0; },
                          [&](const kernel::NaturalLocal& g) { return temporal_decay(g.mt, g.ct, t); },
                          [&](const kernel::NaturalSpaceTime& g) { return temporal_decay(g.mt, g.ct, t); },
                      },
                      k.shape);
}

double clip_unit(double p) {
    if (!(p > 0.0)) return 0.0;
    return std::min(p, 1.0);
}

} // namespace

double eval(const KernelSpec& k, double x, double t) {
    if (k.velocity && t < x / *k.velocity) return 0.0; // not yet arrived
    const double space = spatial_factor(k, x);
    if (space == 0.0) return 0.0;
    return clip_unit(space * temporal_factor(k, t));
}

bool diverges_in_space(const KernelSpec& k) {
    const auto f = k.family();
    return f == KernelFamily::GlobalGap || f == KernelFamily::NaturalGlobal;
}

void validate(const Domain2D& dom) {
    const bool ok = positive(dom.x_max) && positive(dom.t_max) && positive(dom.dx) && positive(dom.dt_grid) &&
                    dom.x_max >= dom.dx && dom.t_max >= dom.dt_grid;
    if (!ok) throw ValidationError("domain requires positive extents and spacings with x_max >= dx, t_max >= dt_grid");
}

double total_influence(const KernelSpec& k, const Domain2D& dom) {
    validate(dom);
    if (k.family() == KernelFamily::Zero) return 0.0;
    const auto ax = axis(dom.x_max, dom.dx);
    const auto at = axis(dom.t_max, dom.dt_grid);
    if (!k.velocity) {
        // Without arrival gating the integrand is separable and the midpoint
        // double sum factors into two single sums.
        double sx = 0.0;
        for (std::size_t i = 0; i < ax.cells; ++i) sx += spatial_factor(k, (static_cast<double>(i) + 0.5) * ax.width);
        double st = 0.0;
        for (std::size_t j = 0; j < at.cells; ++j) st += temporal_factor(k, (static_cast<double>(j) + 0.5) * at.width);
        return sx * ax.width * st * at.width;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.cells; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * ax.width;
        double row = 0.0;
        for (std::size_t j = 0; j < at.cells; ++j) {
            row += eval(k, x, (static_cast<double>(j) + 0.5) * at.width);
        }
        sum += row;
    }
    return sum * ax.width * at.width;
}

double phase_distance(const KernelSpec& a, const KernelSpec& b, const Domain2D& dom) {
    validate(dom);
    if (a == b) return 0.0;
    const auto ax = axis(dom.x_max, dom.dx);
    const auto at = axis(dom.t_max, dom.dt_grid);
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.cells; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * ax.width;
        for (std::size_t j = 0; j < at.cells; ++j) {
            const double t = (static_cast<double>(j) + 0.5) * at.width;
            // Squared difference is symmetric bit-for-bit in (a, b).
            const double d = eval(a, x, t) - eval(b, x, t);
            sum += d * d;
        }
    }
    return std::sqrt(sum * ax.width * at.width);
}

Phase phase_lead(const KernelSpec& a, const KernelSpec& b, double x, double t) {
    const double pa = eval(a, x, t);
    const double pb = eval(b, x, t);
    if (pa > pb) return Phase::Lead;
    if (pa < pb) return Phase::Lag;
    return Phase::Equal;
}

std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Lead: return "lead";
    case Phase::Lag: return "lag";
    case Phase::Equal: return "equal";
    }
    return "?";
}

std::string_view to_string(Principle1 p) {
    switch (p) {
    case Principle1::Pass: return "pass";
    case Principle1::DivergesInSpace: return "diverges-in-space";
    case Principle1::DivergesInTime: return "diverges-in-time";
    case Principle1::BelowReference: return "below-reference";
    }
    return "?";
}

PrincipleReport check_principles(const KernelSpec& k, const KernelSpec& reference, const Domain2D& dom) {
    validate(k);
    validate(reference);
    validate(dom);
    // Every family's temporal factor decays (finite window or exponential), so
    // DivergesInTime cannot arise from a validated spec.
    if (diverges_in_space(reference)) {
        throw ValidationError(fmt::format("reference kernel {} has unbounded total influence", to_string(reference)));
    }
    PrincipleReport report;
    report.principle2_distance = phase_distance(k, reference, dom);
    if (diverges_in_space(k)) {
        report.principle1 = Principle1::DivergesInSpace;
        report.principle1_integral = std::numeric_limits<double>::infinity();
        return report;
    }
    report.principle1_integral = total_influence(k, dom);
    const double reference_integral = total_influence(reference, dom);
    report.principle1 =
        report.principle1_integral > reference_integral ? Principle1::Pass : Principle1::BelowReference;
    return report;
}

} // namespace guidesim
