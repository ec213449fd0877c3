#pragma once

// Finite filtered probability spaces and the conditional lattice calculus.
//
// A space is a scenario tree stored as one partition of the leaf set per
// stage. Stage t = 0 is the trivial partition, stage T the singletons.
// Terminal variables (XVar) carry one extended real per leaf, stage
// variables (TVar) one per atom of the stage partition.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perflat/errors.hpp"

namespace perflat {

/// Extended reals are plain doubles; +inf and -inf are the IEEE infinities.
using ExtReal = double;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace ext {

inline bool is_pos_inf(double x) { return x == kInf; }
inline bool is_neg_inf(double x) { return x == -kInf; }

/// Sum with the convention inf - inf = 0.
inline double add(double a, double b) {
  if ((a == kInf && b == -kInf) || (a == -kInf && b == kInf)) return 0.0;
  return a + b;
}

/// Product with the convention 0 * inf = 0.
inline double mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

/// Equality treating equal-signed infinities as equal and finite values
/// within an absolute tolerance.
bool near(double a, double b, double abs_tol);

/// Like near() but the tolerance scales with max(1, |a|, |b|).
bool near_scaled(double a, double b, double tol);

}  // namespace ext

/// Numerical tolerances shared by the inversion and reconstruction code.
struct Tolerances {
  double tol_c = 1e-10;       ///< cash-axis bisection width
  double tol_z = 1e-8;        ///< level-axis bisection width
  double eps_strict = 1e-12;  ///< band treated as "not strictly positive"

  void validate() const;
};

class FilteredSpace;
using SpacePtr = std::shared_ptr<const FilteredSpace>;

/// Leaf-level partitions for every stage, leaf probabilities, leaf ids.
class FilteredSpace {
 public:
  using Partition = std::vector<std::vector<std::size_t>>;

  /// Builds and validates a space. `partitions[t]` lists the atoms of F_t as
  /// vectors of leaf indices. Throws ValidationError naming the invariant.
  static SpacePtr create(std::vector<std::string> leaf_ids,
                         std::vector<double> probabilities,
                         std::vector<Partition> partitions,
                         std::string name = {});

  const std::string& name() const noexcept { return name_; }
  std::size_t horizon() const noexcept { return partitions_.size() - 1; }
  std::size_t stage_count() const noexcept { return partitions_.size(); }
  std::size_t leaf_count() const noexcept { return probs_.size(); }

  std::span<const double> probabilities() const noexcept { return probs_; }
  double probability(std::size_t leaf) const { return probs_.at(leaf); }
  const std::vector<std::string>& leaf_ids() const noexcept { return ids_; }

  std::size_t atom_count(std::size_t t) const;
  std::span<const std::size_t> atom_leaves(std::size_t t, std::size_t atom) const;
  std::size_t atom_of(std::size_t t, std::size_t leaf) const;
  double atom_probability(std::size_t t, std::size_t atom) const;
  const Partition& partition(std::size_t t) const;

  /// Index of the F_s atom containing atom `atom_t` of F_t (s <= t).
  std::size_t ancestor(std::size_t s, std::size_t t, std::size_t atom_t) const;
  /// Atoms of F_t contained in atom `atom_s` of F_s (s <= t).
  std::vector<std::size_t> descendants(std::size_t s, std::size_t atom_s,
                                       std::size_t t) const;

  /// Canonical atom id "a<t>_<k>".
  static std::string atom_id(std::size_t t, std::size_t atom);
  std::optional<std::size_t> find_leaf(std::string_view id) const;
  /// Resolves either a canonical atom id or a leaf id to an atom of F_t.
  std::optional<std::size_t> resolve_atom(std::size_t t, std::string_view id) const;

  /// Throws DomainError unless 0 <= t <= T.
  void check_stage(std::size_t t) const;

  bool operator==(const FilteredSpace& other) const;

 private:
  FilteredSpace() = default;

  std::string name_;
  std::vector<std::string> ids_;
  std::vector<double> probs_;
  std::vector<Partition> partitions_;
  std::vector<std::vector<std::size_t>> leaf_atom_;   // [t][leaf]
  std::vector<std::vector<double>> atom_prob_;        // [t][atom]
};

bool same_space(const SpacePtr& a, const SpacePtr& b);

/// Two-leaf space {h, t} with probabilities (p, 1 - p) and T = 1.
SpacePtr make_coin_space(double p = 0.5, std::string name = "coin2");
/// Recombination-free binomial tree with `steps` stages and up-probability p.
SpacePtr make_binomial_tree(std::size_t steps, double p_up = 0.5,
                            std::string name = "binomial");
/// Single-period space: T = 1, root atom, given leaf probabilities.
SpacePtr make_one_period_space(std::vector<double> probabilities,
                               std::string name = "one_period");

class TVar;

/// Terminal variable: one value per leaf, bounded below, +inf allowed.
class XVar {
 public:
  XVar(SpacePtr space, std::vector<double> values);
  static XVar constant(SpacePtr space, double c);

  const SpacePtr& space_ptr() const noexcept { return space_; }
  const FilteredSpace& space() const noexcept { return *space_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t leaf) const { return values_[leaf]; }
  std::size_t size() const noexcept { return values_.size(); }

  double min() const;
  double max() const;
  bool is_finite() const;

  bool operator==(const XVar& other) const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

/// F_t-measurable variable: one value per atom of F_t; -inf and +inf allowed.
class TVar {
 public:
  TVar(SpacePtr space, std::size_t stage, std::vector<double> values);
  static TVar constant(SpacePtr space, std::size_t stage, double c);

  const SpacePtr& space_ptr() const noexcept { return space_; }
  const FilteredSpace& space() const noexcept { return *space_; }
  std::size_t stage() const noexcept { return stage_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t atom) const { return values_[atom]; }
  std::size_t size() const noexcept { return values_.size(); }

  /// No -inf anywhere (the L^bb_t range).
  bool bounded_below() const;
  /// No +inf anywhere (the L^ba_t range).
  bool bounded_above() const;

  /// Promotes to leaf level; requires bounded_below().
  XVar to_xvar() const;
  /// Value of this variable on the atom of F_t containing `leaf`.
  double at_leaf(std::size_t leaf) const;

 private:
  SpacePtr space_;
  std::size_t stage_;
  std::vector<double> values_;
};

/// An F_t-measurable event given as a subset of F_t atoms.
class EventMask {
 public:
  EventMask(SpacePtr space, std::size_t stage, std::vector<bool> atoms);
  static EventMask all(SpacePtr space, std::size_t stage);
  static EventMask none(SpacePtr space, std::size_t stage);
  static EventMask single(SpacePtr space, std::size_t stage, std::size_t atom);

  std::size_t stage() const noexcept { return stage_; }
  const SpacePtr& space_ptr() const noexcept { return space_; }
  bool contains_atom(std::size_t atom) const { return atoms_.at(atom); }
  bool contains_leaf(std::size_t leaf) const;
  std::size_t atom_count() const noexcept { return atoms_.size(); }
  EventMask complement() const;

 private:
  SpacePtr space_;
  std::size_t stage_;
  std::vector<bool> atoms_;
};

// ---- pointwise algebra (extended-real conventions) ------------------------

XVar operator+(const XVar& x, double c);
XVar operator-(const XVar& x, double c);
XVar operator+(const XVar& x, const XVar& y);
/// X + xi with xi promoted to leaf level; xi must be bounded below.
XVar operator+(const XVar& x, const TVar& xi);
/// c * X for c >= 0 (0 * inf = 0).
XVar operator*(double c, const XVar& x);
/// Leafwise shift by a per-atom cash vector of stage t.
XVar shift_by_atoms(const XVar& x, std::size_t t, std::span<const double> cash);
/// c X + (1 - c) Y, c in [0, 1].
XVar convex_combination(double c, const XVar& x, const XVar& y);
/// X truncated from above at n (X wedge n).
XVar truncate_above(const XVar& x, double n);
/// X 1_B (0 * inf = 0 outside B).
XVar restrict_to(const XVar& x, const EventMask& b);
/// Leafwise minimum / maximum.
XVar pointwise_min(const XVar& x, const XVar& y);
bool leq(const XVar& x, const XVar& y);

TVar operator-(const TVar& a, const TVar& b);

// ---- conditional calculus --------------------------------------------------

/// E[X | F_t], or E^Q[X | F_t] when per-leaf probabilities `q` are given.
/// An atom containing a +inf leaf of positive weight evaluates to +inf.
/// With `require_agrees_with_p`, Q must give every F_t atom its P mass.
TVar cond_expect(const XVar& x, std::size_t t,
                 std::optional<std::span<const double>> q = std::nullopt,
                 bool require_agrees_with_p = false);

TVar ess_inf_on_atoms(const XVar& x, std::size_t t);
TVar ess_sup_on_atoms(const XVar& x, std::size_t t);

/// X1 on the leaves under B, X2 elsewhere.
XVar paste(const XVar& x1, const XVar& x2, const EventMask& b);

}  // namespace perflat
