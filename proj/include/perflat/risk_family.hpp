#pragma once

// Induced conditional risk measures rho_t^z(X) = essinf{xi : beta_t(X + xi) >= z},
// computed atom by atom, and the way back from a family of risks to the
// performance measure.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perflat/lattice.hpp"
#include "perflat/measures.hpp"
#include "perflat/report.hpp"

namespace perflat {

/// Cap of the bracket expansion in the cash inversion.
inline constexpr double kBracketCap = 1152921504606846976.0;  // 2^60

/// inf{c : accept(c)} for a predicate nondecreasing in c. Starts at 0, doubles
/// outward to the cap, then bisects to `tol`. Returns 0 when the final bracket
/// contains 0, -inf when accepted at -cap; throws InconsistencyError when not
/// accepted at +cap.
double invert_monotone(const std::function<bool(double)>& accept, double tol);

/// Per-atom inversion of the measure: inf{c : beta_t(X + c)|_atom >= z}.
double invert_atom(const Measure& m, std::size_t t, std::size_t atom,
                   std::span<const double> x, double z, double tol_c);

/// rho_t^z(X). Throws DomainError unless z_d < z < z_u.
TVar induce_risk(const Measure& m, std::size_t t, double z, const XVar& x,
                 const Tolerances& tol = {});
/// Same with one level per atom of F_t.
TVar induce_risk(const Measure& m, std::size_t t, std::span<const double> levels,
                 const XVar& x, const Tolerances& tol = {});

/// ln E_t[e^{-lambda X}] / lambda - ln(1 - z) / lambda, evaluated stably.
TVar entropic_closed_form(const TVar& lambda, double z, const XVar& x);
/// The same formula parameterized by w = ln(1 - z), so that levels far below
/// any representable z can still be expressed.
TVar entropic_closed_form_log_level(const TVar& lambda, double w, const XVar& x);
/// Stage-t slice of a risk-aversion process as a TVar.
TVar lambda_at(const RiskAversion& lambda, const SpacePtr& space, std::size_t t);

struct LimitProbe {
  bool reached = false;        ///< esssup rho^z(0) went below -1e6
  double z = 0.0;              ///< last probed level
  double sup_rho0 = 0.0;       ///< esssup rho^z(0) at that level
  std::vector<std::pair<double, double>> trail;  ///< (z, esssup rho^z(0))
};

struct RiskCurve {
  std::size_t t = 0;
  std::vector<double> levels;
  std::vector<TVar> values;
  bool monotone = true;
  nlohmann::json monotone_witness;
  std::optional<LimitProbe> limit;  ///< only when z_d = -inf
};

/// Risk per level of a strictly increasing grid inside (z_d, z_u).
RiskCurve risk_curve(const Measure& m, std::size_t t, const XVar& x,
                     std::span<const double> grid, const Tolerances& tol = {},
                     bool probe_limit = true);

/// Downward probe of esssup rho^z(0) for z_d = -inf: z = -2^k until the value
/// drops below -1e6 or z overflows.
LimitProbe probe_lower_limit(const std::function<TVar(double)>& rho_at_zero);

/// A one-parameter family of conditional risk measures on (z_d, z_u).
struct StandardFamily {
  double z_d = -kInf;
  double z_u = kInf;
  SpacePtr space;
  std::string name;
  std::string provenance;  ///< "induced", "closed-form" or "user-supplied"
  /// sigma^{z_a}_t(X) on every atom a, one level per atom of F_t.
  std::function<TVar(std::span<const double> levels, std::size_t t, const XVar& x)>
      evaluate_levels;

  TVar evaluate(double z, std::size_t t, const XVar& x) const;
};

StandardFamily induced_family(MeasurePtr m, Tolerances tol = {});
StandardFamily entropic_family(SpacePtr space, RiskAversion lambda);

/// The measure generated by a family: z_d where sigma^z(X) >= 0 at every level,
/// otherwise sup{z : sigma^z(X) < 0}, found by bisection in u = atan z.
/// `near_zero` (optional) flags atoms where |sigma| < tol_c at the answer.
TVar reconstruct(const StandardFamily& f, std::size_t t, const XVar& x,
                 const Tolerances& tol = {}, std::vector<bool>* near_zero = nullptr);

Report validate_standard_family(const StandardFamily& f, std::size_t trials,
                                std::span<const double> z_grid, std::uint64_t seed,
                                const Tolerances& tol = {});

struct DualSolution {
  TVar rho;
  std::vector<double> q;  ///< optimal conditional density per leaf, mass 1 per atom
};

/// GLR risk through the linear program over the ratio-constrained polytope.
DualSolution glr_dual_solve(std::size_t t, double z, const XVar& x);
inline TVar glr_dual_risk(std::size_t t, double z, const XVar& x) {
  return glr_dual_solve(t, z, x).rho;
}
/// Whether per-leaf weights q (mass 1 on each F_t atom) satisfy the stage-t
/// ratio constraints q_i p_j <= (1 + z) q_j p_i inside every atom.
std::vector<bool> glr_dual_feasible(const FilteredSpace& space, std::size_t t, double z,
                                    std::span<const double> q, double tol = 1e-10);

Report truncation_limit_check(const Measure& m, std::size_t t, double z, const XVar& x,
                              std::span<const double> n_grid, const Tolerances& tol = {});

Report closure_check(const Measure& m, std::size_t t, double z, std::size_t trials,
                     std::uint64_t seed, const Tolerances& tol = {});

/// Lower bound alpha_hat(Q) = max_k (E^Q_t[-Z_k] - rho_t^z(Z_k)) per atom.
TVar penalty_lower_bound(const Measure& m, std::size_t t, double z,
                         std::span<const double> q, const std::vector<XVar>& probes,
                         const Tolerances& tol = {});

}  // namespace perflat
