#include "perflat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace perflat {

namespace ext {

bool near(double a, double b, double abs_tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= abs_tol;
}

bool near_scaled(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

}  // namespace ext

void Tolerances::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(tol_c)) throw ValidationError("tolerance_positive", "tol_c must be positive");
  if (!ok(tol_z)) throw ValidationError("tolerance_positive", "tol_z must be positive");
  if (!ok(eps_strict))
    throw ValidationError("tolerance_positive", "eps_strict must be positive");
}

// ---- FilteredSpace ----------------------------------------------------------

SpacePtr FilteredSpace::create(std::vector<std::string> leaf_ids,
                               std::vector<double> probabilities,
                               std::vector<Partition> partitions, std::string name) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw ValidationError("nonempty_leaves", "space has no leaves");
  if (leaf_ids.size() != n)
    throw ValidationError("leaf_ids", "leaf id count does not match probabilities");
  if (partitions.empty())
    throw ValidationError("stages", "space needs at least one stage");

  for (std::size_t i = 0; i < n; ++i) {
    if (!(probabilities[i] > 0.0) || !std::isfinite(probabilities[i]))
      throw ValidationError("positive_probability",
                            "leaf '" + leaf_ids[i] + "' has non-positive probability");
    for (std::size_t j = 0; j < i; ++j)
      if (leaf_ids[i] == leaf_ids[j])
        throw ValidationError("unique_leaf_ids", "duplicate leaf id '" + leaf_ids[i] + "'");
  }
  double total = 0.0;
  for (double p : probabilities) total += p;
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "leaf probabilities sum to " << total << ", expected 1";
    throw ValidationError("probabilities_sum_to_one", os.str());
  }

  auto sp = std::shared_ptr<FilteredSpace>(new FilteredSpace());
  sp->name_ = std::move(name);
  sp->ids_ = std::move(leaf_ids);
  sp->probs_ = std::move(probabilities);
  sp->leaf_atom_.assign(partitions.size(), std::vector<std::size_t>(n, n));
  sp->atom_prob_.resize(partitions.size());

  for (std::size_t t = 0; t < partitions.size(); ++t) {
    auto& part = partitions[t];
    auto& owner = sp->leaf_atom_[t];
    for (std::size_t a = 0; a < part.size(); ++a) {
      if (part[a].empty())
        throw ValidationError("partition", "empty atom at stage " + std::to_string(t));
      std::sort(part[a].begin(), part[a].end());
      for (std::size_t leaf : part[a]) {
        if (leaf >= n)
          throw ValidationError("partition", "leaf index out of range at stage " +
                                                 std::to_string(t));
        if (owner[leaf] != n)
          throw ValidationError("partition", "leaf '" + sp->ids_[leaf] +
                                                 "' appears in two atoms at stage " +
                                                 std::to_string(t));
        owner[leaf] = a;
      }
    }
    for (std::size_t leaf = 0; leaf < n; ++leaf)
      if (owner[leaf] == n)
        throw ValidationError("partition", "leaf '" + sp->ids_[leaf] +
                                               "' is not covered at stage " +
                                               std::to_string(t));
  }

  if (partitions.front().size() != 1)
    throw ValidationError("root_atom", "stage 0 must be a single atom");
  if (partitions.back().size() != n)
    throw ValidationError("terminal_singletons", "last stage must consist of singletons");
  for (std::size_t t = 1; t < partitions.size(); ++t) {
    // every atom at t must lie inside one atom at t-1
    for (const auto& atom : partitions[t]) {
      std::size_t parent = sp->leaf_atom_[t - 1][atom.front()];
      for (std::size_t leaf : atom)
        if (sp->leaf_atom_[t - 1][leaf] != parent)
          throw ValidationError("refinement", "stage " + std::to_string(t) +
                                                  " does not refine stage " +
                                                  std::to_string(t - 1));
    }
  }

  sp->partitions_ = std::move(partitions);
  for (std::size_t t = 0; t < sp->partitions_.size(); ++t) {
    auto& ap = sp->atom_prob_[t];
    ap.resize(sp->partitions_[t].size());
    for (std::size_t a = 0; a < ap.size(); ++a) {
      double m = 0.0;
      for (std::size_t leaf : sp->partitions_[t][a]) m += sp->probs_[leaf];
      ap[a] = m;
    }
  }
  return sp;
}

void FilteredSpace::check_stage(std::size_t t) const {
  if (t >= partitions_.size())
    throw DomainError("stage " + std::to_string(t) + " not in space (T = " +
                      std::to_string(horizon()) + ")");
}

std::size_t FilteredSpace::atom_count(std::size_t t) const {
  check_stage(t);
  return partitions_[t].size();
}

std::span<const std::size_t> FilteredSpace::atom_leaves(std::size_t t,
                                                        std::size_t atom) const {
  check_stage(t);
  return partitions_[t].at(atom);
}

std::size_t FilteredSpace::atom_of(std::size_t t, std::size_t leaf) const {
  check_stage(t);
  return leaf_atom_[t].at(leaf);
}

double FilteredSpace::atom_probability(std::size_t t, std::size_t atom) const {
  check_stage(t);
  return atom_prob_[t].at(atom);
}

const FilteredSpace::Partition& FilteredSpace::partition(std::size_t t) const {
  check_stage(t);
  return partitions_[t];
}

std::size_t FilteredSpace::ancestor(std::size_t s, std::size_t t,
                                    std::size_t atom_t) const {
  check_stage(s);
  check_stage(t);
  if (s > t) throw DomainError("ancestor requires s <= t");
  return leaf_atom_[s][partitions_[t].at(atom_t).front()];
}

std::vector<std::size_t> FilteredSpace::descendants(std::size_t s, std::size_t atom_s,
                                                    std::size_t t) const {
  check_stage(s);
  check_stage(t);
  if (s > t) throw DomainError("descendants requires s <= t");
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < partitions_[t].size(); ++a)
    if (leaf_atom_[s][partitions_[t][a].front()] == atom_s) out.push_back(a);
  return out;
}

std::string FilteredSpace::atom_id(std::size_t t, std::size_t atom) {
  return "a" + std::to_string(t) + "_" + std::to_string(atom);
}

std::optional<std::size_t> FilteredSpace::find_leaf(std::string_view id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> FilteredSpace::resolve_atom(std::size_t t,
                                                       std::string_view id) const {
  check_stage(t);
  for (std::size_t a = 0; a < partitions_[t].size(); ++a)
    if (atom_id(t, a) == id) return a;
  // a leaf id names the atom containing it
  if (auto leaf = find_leaf(id)) return leaf_atom_[t][*leaf];
  return std::nullopt;
}

bool FilteredSpace::operator==(const FilteredSpace& other) const {
  return ids_ == other.ids_ && probs_ == other.probs_ && partitions_ == other.partitions_;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (!a || !b) return false;
  return a == b || *a == *b;
}

SpacePtr make_coin_space(double p, std::string name) {
  return FilteredSpace::create({"h", "t"}, {p, 1.0 - p}, {{{0, 1}}, {{0}, {1}}},
                               std::move(name));
}

SpacePtr make_binomial_tree(std::size_t steps, double p_up, std::string name) {
  if (steps == 0) throw DomainError("binomial tree needs at least one step");
  if (steps > 20) throw DomainError("binomial tree too deep");
  const std::size_t n = std::size_t{1} << steps;
  std::vector<std::string> ids(n);
  std::vector<double> probs(n);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    std::string id;
    double p = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
      bool up = ((leaf >> (steps - 1 - k)) & 1U) == 0;
      id += up ? 'u' : 'd';
      p *= up ? p_up : 1.0 - p_up;
    }
    ids[leaf] = id;
    probs[leaf] = p;
  }
  std::vector<FilteredSpace::Partition> parts(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) {
    std::size_t atoms = std::size_t{1} << t;
    std::size_t width = n / atoms;
    parts[t].resize(atoms);
    for (std::size_t a = 0; a < atoms; ++a)
      for (std::size_t k = 0; k < width; ++k) parts[t][a].push_back(a * width + k);
  }
  return FilteredSpace::create(std::move(ids), std::move(probs), std::move(parts),
                               std::move(name));
}

SpacePtr make_one_period_space(std::vector<double> probabilities, std::string name) {
  const std::size_t n = probabilities.size();
  std::vector<std::string> ids(n);
  FilteredSpace::Partition root(1), leaves(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = "w" + std::to_string(i);
    root[0].push_back(i);
    leaves[i] = {i};
  }
  return FilteredSpace::create(std::move(ids), std::move(probabilities),
                               {std::move(root), std::move(leaves)}, std::move(name));
}

// ---- variables --------------------------------------------------------------

XVar::XVar(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw DomainError("variable without space");
  if (values_.size() != space_->leaf_count())
    throw DomainError("variable has " + std::to_string(values_.size()) +
                      " values, space has " + std::to_string(space_->leaf_count()) +
                      " leaves");
  for (double v : values_) {
    if (std::isnan(v)) throw DomainError("NaN in terminal variable");
    if (v == -kInf) throw DomainError("terminal variable must be bounded below");
  }
}

XVar XVar::constant(SpacePtr space, double c) {
  std::size_t n = space->leaf_count();
  return XVar(std::move(space), std::vector<double>(n, c));
}

double XVar::min() const { return *std::min_element(values_.begin(), values_.end()); }
double XVar::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool XVar::is_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool XVar::operator==(const XVar& other) const {
  return same_space(space_, other.space_) && values_ == other.values_;
}

TVar::TVar(SpacePtr space, std::size_t stage, std::vector<double> values)
    : space_(std::move(space)), stage_(stage), values_(std::move(values)) {
  if (!space_) throw DomainError("variable without space");
  space_->check_stage(stage_);
  if (values_.size() != space_->atom_count(stage_))
    throw DomainError("stage variable needs one value per atom of stage " +
                      std::to_string(stage_));
  for (double v : values_)
    if (std::isnan(v)) throw DomainError("NaN in stage variable");
}

TVar TVar::constant(SpacePtr space, std::size_t stage, double c) {
  std::size_t n = space->atom_count(stage);
  return TVar(std::move(space), stage, std::vector<double>(n, c));
}

bool TVar::bounded_below() const {
  return std::none_of(values_.begin(), values_.end(), [](double v) { return v == -kInf; });
}

bool TVar::bounded_above() const {
  return std::none_of(values_.begin(), values_.end(), [](double v) { return v == kInf; });
}

XVar TVar::to_xvar() const {
  if (!bounded_below()) throw DomainError("cannot promote a variable with -inf values");
  std::vector<double> out(space_->leaf_count());
  for (std::size_t leaf = 0; leaf < out.size(); ++leaf) out[leaf] = at_leaf(leaf);
  return XVar(space_, std::move(out));
}

double TVar::at_leaf(std::size_t leaf) const {
  return values_[space_->atom_of(stage_, leaf)];
}

EventMask::EventMask(SpacePtr space, std::size_t stage, std::vector<bool> atoms)
    : space_(std::move(space)), stage_(stage), atoms_(std::move(atoms)) {
  space_->check_stage(stage_);
  if (atoms_.size() != space_->atom_count(stage_))
    throw DomainError("event mask size does not match atoms of stage " +
                      std::to_string(stage_));
}

EventMask EventMask::all(SpacePtr space, std::size_t stage) {
  std::size_t n = space->atom_count(stage);
  return EventMask(std::move(space), stage, std::vector<bool>(n, true));
}

EventMask EventMask::none(SpacePtr space, std::size_t stage) {
  std::size_t n = space->atom_count(stage);
  return EventMask(std::move(space), stage, std::vector<bool>(n, false));
}

EventMask EventMask::single(SpacePtr space, std::size_t stage, std::size_t atom) {
  std::size_t n = space->atom_count(stage);
  std::vector<bool> m(n, false);
  m.at(atom) = true;
  return EventMask(std::move(space), stage, std::move(m));
}

bool EventMask::contains_leaf(std::size_t leaf) const {
  return atoms_[space_->atom_of(stage_, leaf)];
}

EventMask EventMask::complement() const {
  std::vector<bool> c(atoms_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = !atoms_[i];
  return EventMask(space_, stage_, std::move(c));
}

// ---- pointwise algebra ------------------------------------------------------

namespace {

void require_same(const SpacePtr& a, const SpacePtr& b) {
  if (!same_space(a, b)) throw DomainError("variables live on different spaces");
}

template <class F>
XVar map_leaves(const XVar& x, F f) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(i, x[i]);
  return XVar(x.space_ptr(), std::move(out));
}

}  // namespace

XVar operator+(const XVar& x, double c) {
  return map_leaves(x, [c](std::size_t, double v) { return ext::add(v, c); });
}

XVar operator-(const XVar& x, double c) { return x + (-c); }

XVar operator+(const XVar& x, const XVar& y) {
  require_same(x.space_ptr(), y.space_ptr());
  return map_leaves(x, [&y](std::size_t i, double v) { return ext::add(v, y[i]); });
}

XVar operator+(const XVar& x, const TVar& xi) {
  require_same(x.space_ptr(), xi.space_ptr());
  if (!xi.bounded_below()) throw DomainError("cash shift must be bounded below");
  return map_leaves(x, [&xi](std::size_t i, double v) { return ext::add(v, xi.at_leaf(i)); });
}

XVar operator*(double c, const XVar& x) {
  if (!(c >= 0.0)) throw DomainError("scaling factor must be nonnegative");
  return map_leaves(x, [c](std::size_t, double v) { return ext::mul(c, v); });
}

XVar shift_by_atoms(const XVar& x, std::size_t t, std::span<const double> cash) {
  const auto& sp = x.space();
  if (cash.size() != sp.atom_count(t)) throw DomainError("cash vector size mismatch");
  return map_leaves(x, [&](std::size_t i, double v) {
    return ext::add(v, cash[sp.atom_of(t, i)]);
  });
}

XVar convex_combination(double c, const XVar& x, const XVar& y) {
  require_same(x.space_ptr(), y.space_ptr());
  if (!(c >= 0.0 && c <= 1.0)) throw DomainError("convex weight outside [0,1]");
  return map_leaves(x, [&](std::size_t i, double v) {
    return ext::add(ext::mul(c, v), ext::mul(1.0 - c, y[i]));
  });
}

XVar truncate_above(const XVar& x, double n) {
  return map_leaves(x, [n](std::size_t, double v) { return std::min(v, n); });
}

XVar restrict_to(const XVar& x, const EventMask& b) {
  require_same(x.space_ptr(), b.space_ptr());
  return map_leaves(x, [&b](std::size_t i, double v) { return b.contains_leaf(i) ? v : 0.0; });
}

XVar pointwise_min(const XVar& x, const XVar& y) {
  require_same(x.space_ptr(), y.space_ptr());
  return map_leaves(x, [&y](std::size_t i, double v) { return std::min(v, y[i]); });
}

bool leq(const XVar& x, const XVar& y) {
  require_same(x.space_ptr(), y.space_ptr());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] <= y[i])) return false;
  return true;
}

TVar operator-(const TVar& a, const TVar& b) {
  require_same(a.space_ptr(), b.space_ptr());
  if (a.stage() != b.stage()) throw DomainError("stage mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ext::add(a[i], -b[i]);
  return TVar(a.space_ptr(), a.stage(), std::move(out));
}

// ---- conditional calculus ---------------------------------------------------

TVar cond_expect(const XVar& x, std::size_t t, std::optional<std::span<const double>> q,
                 bool require_agrees_with_p) {
  const auto& sp = x.space();
  sp.check_stage(t);
  if (q) {
    if (q->size() != sp.leaf_count())
      throw DomainError("measure has " + std::to_string(q->size()) +
                        " weights, space has " + std::to_string(sp.leaf_count()) +
                        " leaves");
    double total = 0.0;
    for (double w : *q) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("measure weight negative");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-10) throw DomainError("measure weights do not sum to 1");
  }
  std::vector<double> out(sp.atom_count(t));
  for (std::size_t a = 0; a < out.size(); ++a) {
    double mass = 0.0;
    for (std::size_t leaf : sp.atom_leaves(t, a)) mass += q ? (*q)[leaf] : sp.probability(leaf);
    if (!(mass > 0.0))
      throw DomainError("measure gives zero mass to atom " + FilteredSpace::atom_id(t, a));
    if (q && require_agrees_with_p && std::fabs(mass - sp.atom_probability(t, a)) > 1e-10)
      throw DomainError("measure does not agree with P on atom " +
                        FilteredSpace::atom_id(t, a));
    double acc = 0.0;
    for (std::size_t leaf : sp.atom_leaves(t, a)) {
      double w = q ? (*q)[leaf] : sp.probability(leaf);
      acc = ext::add(acc, ext::mul(w, x[leaf]));
    }
    out[a] = std::isinf(acc) ? acc : acc / mass;
  }
  return TVar(x.space_ptr(), t, std::move(out));
}

TVar ess_inf_on_atoms(const XVar& x, std::size_t t) {
  const auto& sp = x.space();
  std::vector<double> out(sp.atom_count(t), kInf);
  for (std::size_t leaf = 0; leaf < x.size(); ++leaf) {
    auto& slot = out[sp.atom_of(t, leaf)];
    slot = std::min(slot, x[leaf]);
  }
  return TVar(x.space_ptr(), t, std::move(out));
}

TVar ess_sup_on_atoms(const XVar& x, std::size_t t) {
  const auto& sp = x.space();
  std::vector<double> out(sp.atom_count(t), -kInf);
  for (std::size_t leaf = 0; leaf < x.size(); ++leaf) {
    auto& slot = out[sp.atom_of(t, leaf)];
    slot = std::max(slot, x[leaf]);
  }
  return TVar(x.space_ptr(), t, std::move(out));
}

XVar paste(const XVar& x1, const XVar& x2, const EventMask& b) {
  require_same(x1.space_ptr(), x2.space_ptr());
  require_same(x1.space_ptr(), b.space_ptr());
  return map_leaves(x1, [&](std::size_t i, double v) {
    return b.contains_leaf(i) ? v : x2[i];
  });
}

}  // namespace perflat
