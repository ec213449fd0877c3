#pragma once

// Dynamic performance measures: one measure evaluated at every stage, and
// the time-consistency property beta_t(X) > z  =>  beta_s(X) > z (s < t).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "perflat/lattice.hpp"
#include "perflat/measures.hpp"
#include "perflat/report.hpp"

namespace perflat {

class DynamicMeasure {
 public:
  explicit DynamicMeasure(MeasurePtr m);

  const Measure& measure() const noexcept { return *m_; }
  const MeasurePtr& measure_ptr() const noexcept { return m_; }
  const SpacePtr& space() const noexcept { return m_->space(); }
  double lower_bound() const noexcept { return m_->lower_bound(); }
  double upper_bound() const noexcept { return m_->upper_bound(); }
  TVar evaluate(std::size_t t, const XVar& x) const { return m_->evaluate(t, x); }

 private:
  MeasurePtr m_;
};

/// A localized violation: beta_t(X) > z on every F_t atom below the F_s atom
/// `atom_s`, while beta_s(X) <= z there.
struct Witness {
  XVar x;
  std::size_t s = 0;
  std::size_t t = 0;
  double z = 0.0;
  std::size_t atom_s = 0;
  double margin = 0.0;

  nlohmann::json to_json() const;
};

struct ConsistencyReport {
  bool counterexample = false;
  std::optional<Witness> witness;
  Report report;

  nlohmann::json to_json() const;
};

/// Re-checks a witness: beta_t > z + 1e-9 below the atom, beta_s <= z - 1e-9 on
/// it, and the risk-side form rho_t^z < 0, rho_s^z >= 0 at cash tolerance tol_c.
bool verify_witness(const DynamicMeasure& d, const Witness& w, double tol_c = 1e-12);

/// Samples random X and checks, for every stage pair s < t, every level of
/// the grid and every F_s atom, the measure-level criterion and the two
/// risk-side criteria ({rho_t < 0} in {rho_s < 0}, {rho_t <= 0} in {rho_s <= 0}).
ConsistencyReport check_time_consistency(const DynamicMeasure& d,
                                         std::span<const double> z_grid, std::size_t trials,
                                         std::uint64_t seed, const Tolerances& tol = {});

/// Random search plus coordinate refinement for the largest violation margin.
/// Deterministic for a given (budget, seed).
ConsistencyReport search_counterexample(const DynamicMeasure& d, std::size_t budget,
                                        std::uint64_t seed);

/// Turns a localized witness into a global one: outside the atom the
/// position is replaced by a constant acceptable at every stage.
std::optional<XVar> globalize_witness(const DynamicMeasure& d, const Witness& w);
/// Finds the F_s atom on which a global violation (beta_t > z everywhere,
/// beta_s <= z somewhere) sits.
std::optional<Witness> localize_witness(const DynamicMeasure& d, const XVar& x, std::size_t s,
                                        std::size_t t, double z);

/// Pathwise monotonicity of a risk-aversion process.
struct PathwiseMonotonicity {
  bool nondecreasing = true;
  bool nonincreasing = true;
};
PathwiseMonotonicity pathwise_monotonicity(const RiskAversion& lambda, const FilteredSpace& sp);

/// Runs the consistency checker and the counterexample search on the
/// exponential utility measure with this risk-aversion process and records,
/// for each orientation of the monotonicity condition, whether the verdict
/// matches it.
Report check_riskaversion_monotone_consistency(SpacePtr space, const RiskAversion& lambda,
                                               std::span<const double> z_grid,
                                               std::size_t trials, std::uint64_t seed);

/// E^Q_s[alpha_t(Q)] <= alpha_s(Q) for the GLR dual sets, where alpha is 0 on
/// feasible atoms and +inf elsewhere. Throws DomainError for other measures.
Report check_penalty_inequality_coherent(const DynamicMeasure& d, double z, std::size_t s,
                                         std::size_t t, std::size_t q_samples,
                                         std::uint64_t seed);

}  // namespace perflat
