#pragma once

// Conditional performance measures on a finite filtered space.
//
// Every measure is evaluated atom by atom: the value on an F_t atom only
// reads the leaves below it, which is what makes locality hold by
// construction and lets the risk engine invert each atom separately.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perflat/lattice.hpp"
#include "perflat/utility.hpp"

namespace perflat {

/// Risk-aversion process for the exponential utility measure: either one
/// constant or one value per atom of every stage.
struct RiskAversion {
  std::optional<double> constant = 1.0;
  std::vector<std::vector<double>> per_stage;  ///< [t][atom], used when !constant

  static RiskAversion fixed(double lambda) { return RiskAversion{lambda, {}}; }
  static RiskAversion process(std::vector<std::vector<double>> values) {
    return RiskAversion{std::nullopt, std::move(values)};
  }

  double at(std::size_t t, std::size_t atom) const;
  double min() const;
  /// Checks shape against the space and lambda >= c > 0.
  void validate(const FilteredSpace& space) const;
};

struct Denominator {
  enum class Kind { LPM, AVaR };
  Kind kind = Kind::LPM;
  double p = 2.0;       ///< LPM order, p >= 1
  double level = 0.05;  ///< AVaR level in (0, 1)
  /// Alternative convention: +inf wherever the truncated risk vanishes,
  /// whatever the sign of the reward. Off by default.
  bool infinite_on_nonpositive_risk = false;
};

struct MeasureSpec {
  enum class Kind {
    CondExpectation,
    ExpectedUtility,
    ExponentialUtility,
    CertaintyEquivalent,
    GainLoss,
    RewardRisk
  };

  Kind kind = Kind::GainLoss;
  std::vector<double> q;            ///< CondExpectation weights per leaf; empty means P
  Utility utility = Utility::linear();
  std::vector<double> endowment;    ///< ExpectedUtility: per-leaf W, evaluates U(X + W)
  RiskAversion lambda;              ///< ExponentialUtility
  Denominator denominator;          ///< RewardRisk
  std::optional<double> z_d, z_u;   ///< declared bounds, must match the implied ones

  static MeasureSpec glr();
  static MeasureSpec lpm_ratio(double p = 2.0);
  static MeasureSpec avar_ratio(double level);
  static MeasureSpec exp_utility(double lambda = 1.0);
  static MeasureSpec exp_utility(RiskAversion lambda);
  static MeasureSpec expected_utility(Utility u);
  static MeasureSpec certainty_equivalent(Utility u);
  static MeasureSpec cond_expectation(std::vector<double> q = {});

  std::string kind_name() const;
};

class Measure;
using MeasurePtr = std::shared_ptr<const Measure>;

class Measure {
 public:
  virtual ~Measure() = default;

  virtual std::string name() const = 0;
  double lower_bound() const noexcept { return z_d_; }
  double upper_bound() const noexcept { return z_u_; }
  /// Whether the measure is expected to be scale invariant and nonnegative.
  virtual bool scale_invariant_candidate() const { return false; }
  const SpacePtr& space() const noexcept { return space_; }
  const MeasureSpec& spec() const noexcept { return spec_; }
  double eps_strict() const noexcept { return eps_strict_; }

  TVar evaluate(std::size_t t, const XVar& x) const;
  /// Atoms of F_t where a strict case split landed inside the eps band.
  std::vector<bool> strict_ties(std::size_t t, const XVar& x) const;

  /// Value on one atom; `leaf_values` holds every leaf of the space but only
  /// the leaves of the atom are read.
  virtual double eval_atom(std::size_t t, std::size_t atom,
                           std::span<const double> leaf_values, bool* tie) const = 0;

 protected:
  Measure(MeasureSpec spec, SpacePtr space, double eps_strict);

  MeasureSpec spec_;
  SpacePtr space_;
  double eps_strict_;
  double z_d_ = -kInf;
  double z_u_ = kInf;
};

/// Builds a measure; throws ValidationError on bad parameters or on declared
/// bounds that differ from the implied ones.
MeasurePtr make_measure(const MeasureSpec& spec, SpacePtr space, double eps_strict = 1e-12);

/// Conditional AVaR on one atom at level `level` by the sorted-tail formula.
double avar_on_atom(std::span<const double> values, std::span<const double> probs,
                    double level);

}  // namespace perflat
