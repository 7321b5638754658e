#pragma once

// JSON configuration documents for bases, kernels, grids, integrator
// measures and field specifications. Readers fill in defaults in place, so
// the document left behind is the fully resolved configuration; reading it
// again yields the same objects and leaves it unchanged.
//
// Unbounded interval ends are written as null, "inf" or "-inf".

#include <string>
#include <vector>

#include <json.hpp>

#include "sdfields/field_process.hpp"
#include "sdfields/integrated_fields.hpp"
#include "sdfields/kernel.hpp"
#include "sdfields/levy_core.hpp"
#include "sdfields/volterra_sim.hpp"

namespace sdfields {

using json = nlohmann::ordered_json;

/// Parses a JSON file; throws ConfigParse with file:line:column on malformed input.
json load_json_file(const std::string& path);
/// Parses JSON text; `origin` names the source in diagnostics.
json parse_json_text(const std::string& text, const std::string& origin);

/// Lévy basis:
///   {"family": "gaussian" | "poisson" | "compound_poisson" | "gamma" |
///              "tempered_stable" | "custom",
///    "sigma": b, "drift": number | "centered" | "pure_jump",
///    family parameters..., "control": {...}}
/// `path` prefixes field names in error messages.
LevyQuadruplet basis_from_json(json& j, const std::string& path = "basis");
/// {"family": "ou" | "gamma" | "fractional" | "custom", "alpha", "scale", ...}
KernelSpec kernel_from_json(json& j, const std::string& path = "kernel");
/// {"s_range": [s0, s1], "ds", "u_points": [...], "eps", "seed"}
SimGrid grid_from_json(json& j, const std::string& path = "grid");
/// {"kind": "lebesgue" | "weighted", "support": [lo, hi], "density": expr in u, "breaks"}
IntegratorMeasure measure_from_json(json& j, const std::string& path = "mu");
/// [[a, b], ...] or {"sets": [[a, b], ...]}
std::vector<Interval> sets_from_json(json& j, const std::string& path = "sets");
/// {"basis": {...}, "kernel": {...}, "window": grid, "integrand": ...}
MasterMeasureSpec master_from_json(json& j, const std::string& path = "spec");
/// Integrand of a field-process integral: "ou", "langevin",
/// {"indicator": [a, b]} or {"expr": text in s, "support": [lo, hi], "breaks": [...]}.
SFunction integrand_from_json(json& j, const std::string& path = "integrand");

/// Interval from [lo, hi] with null / "inf" / "-inf" for unbounded ends.
Interval interval_from_json(const json& j, const std::string& path);
json interval_to_json(Interval i);
/// A double that may be infinite: finite numbers stay numbers, infinities become strings.
json number_to_json(double x);

}  // namespace sdfields
