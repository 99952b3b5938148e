#pragma once

#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guidesim {

// Information-propagation kernels: the weight p = F(x, t) a piece of traffic
// information carries at road distance x from where it emerged, t steps after
// it emerged. Every kernel evaluates into [0, 1].

namespace kernel {

/// No propagation: p = 0 everywhere.
struct Zero {
    bool operator==(const Zero&) const = default;
};

/// Network-wide, full weight for `dt` steps.
struct GlobalGap {
    double dt = 5.0;

    bool operator==(const GlobalGap&) const = default;
};

/// Network-wide, exponential decay in time: mt^(-t/ct).
struct NaturalGlobal {
    double mt = std::numbers::e;
    double ct = 10.0;

    bool operator==(const NaturalGlobal&) const = default;
};

/// Full weight inside the ball x <= x_radius for `dt` steps.
struct LocalGap {
    double x_radius = 1.0;
    double dt = 5.0;

    bool operator==(const LocalGap&) const = default;
};

/// Exponential decay in time inside the ball x <= x_radius.
struct NaturalLocal {
    double x_radius = 1.0;
    double mt = std::numbers::e;
    double ct = 10.0;

    bool operator==(const NaturalLocal&) const = default;
};

/// Exponential decay in both space and time: mx^(-x/cx) * mt^(-t/ct).
struct NaturalSpaceTime {
    double mx = std::numbers::e;
    double cx = 1.0;
    double mt = std::numbers::e;
    double ct = 10.0;

    bool operator==(const NaturalSpaceTime&) const = default;
};

} // namespace kernel

enum class KernelFamily { Zero, GlobalGap, NaturalGlobal, LocalGap, NaturalLocal, NaturalSpaceTime };

using KernelShape = std::variant<kernel::Zero, kernel::GlobalGap, kernel::NaturalGlobal, kernel::LocalGap,
                                 kernel::NaturalLocal, kernel::NaturalSpaceTime>;

struct KernelSpec {
    KernelShape shape;
    /// Propagation velocity in distance units per step; absent means instantaneous.
    std::optional<double> velocity;

    KernelFamily family() const;
    bool operator==(const KernelSpec&) const = default;
};

/// Throws ValidationError when any parameter is out of bounds.
void validate(const KernelSpec& k);

/// Canonical family names: zero, global-gap, natural-global, local-gap, natural-local, natural-spacetime.
std::string_view family_name(KernelFamily f);
KernelFamily parse_family(std::string_view name);

/// Parameter names of a family, in canonical order (velocity excluded).
const std::vector<std::string>& parameter_names(KernelFamily f);

/// Reads / writes a named parameter; "v" addresses the velocity. Unknown names throw ValidationError.
double get_parameter(const KernelSpec& k, std::string_view name);
void set_parameter(KernelSpec& k, std::string_view name, double value);

/// Family defaults overridden by `params` (unknown keys rejected), then validated.
KernelSpec make_kernel(KernelFamily f, const std::map<std::string, double>& params);

/// Compact text form `family:key=value,...`, e.g. `natural-spacetime:cx=2,ct=3`.
KernelSpec parse_kernel(std::string_view text);
std::string to_string(const KernelSpec& k);

/// p = F(x, t). x may be kUnreachable (+inf).
double eval(const KernelSpec& k, double x, double t);

/// True when the spatial factor is constant in x, so the space integral is unbounded.
bool diverges_in_space(const KernelSpec& k);

/// Rectangular integration region [0, x_max] x [0, t_max] with midpoint grid spacings.
struct Domain2D {
    double x_max = 40.0;
    double t_max = 60.0;
    double dx = 0.05;
    double dt_grid = 0.05;
};

void validate(const Domain2D& dom);

/// Midpoint-rule double integral of eval over the domain. Cell counts are
/// round(extent / spacing), at least one, with spacing adjusted to fit exactly.
double total_influence(const KernelSpec& k, const Domain2D& dom);

/// Discretized L2 distance between two kernels over the domain grid.
double phase_distance(const KernelSpec& a, const KernelSpec& b, const Domain2D& dom);

enum class Phase { Lead, Lag, Equal };
Phase phase_lead(const KernelSpec& a, const KernelSpec& b, double x, double t);
std::string_view to_string(Phase p);

enum class Principle1 { Pass, DivergesInSpace, DivergesInTime, BelowReference };
std::string_view to_string(Principle1 p);

struct PrincipleReport {
    Principle1 principle1 = Principle1::Pass;
    double principle1_integral = 0.0; ///< +inf when divergent
    double principle2_distance = 0.0;
};

/**
 * Finite-amplification check against a reference influence function, and the
 * phase distance to it.
 *
 * Spatially constant families diverge by construction and are classified
 * without integrating. Otherwise the kernel passes only when its integral
 * strictly exceeds the reference integral on `dom`. Throws ValidationError
 * when the reference itself diverges.
 */
PrincipleReport check_principles(const KernelSpec& k, const KernelSpec& reference, const Domain2D& dom);

} // namespace guidesim
