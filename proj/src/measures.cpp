#include "perflat/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perflat {

// ---- RiskAversion -----------------------------------------------------------

double RiskAversion::at(std::size_t t, std::size_t atom) const {
  if (constant) return *constant;
  return per_stage.at(t).at(atom);
}

double RiskAversion::min() const {
  if (constant) return *constant;
  double m = kInf;
  for (const auto& st : per_stage)
    for (double v : st) m = std::min(m, v);
  return m;
}

void RiskAversion::validate(const FilteredSpace& space) const {
  auto check = [](double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError("risk_aversion_positive",
                            "risk aversion must be finite and bounded away from 0");
  };
  if (constant) {
    check(*constant);
    return;
  }
  if (per_stage.size() != space.stage_count())
    throw ValidationError("risk_aversion_shape",
                          "risk aversion process needs one entry per stage");
  for (std::size_t t = 0; t < per_stage.size(); ++t) {
    if (per_stage[t].size() != space.atom_count(t))
      throw ValidationError("risk_aversion_shape", "risk aversion at stage " +
                                                       std::to_string(t) +
                                                       " needs one value per atom");
    for (double v : per_stage[t]) check(v);
  }
}

// ---- MeasureSpec ------------------------------------------------------------

MeasureSpec MeasureSpec::glr() { return MeasureSpec{}; }

MeasureSpec MeasureSpec::lpm_ratio(double p) {
  MeasureSpec s;
  s.kind = Kind::RewardRisk;
  s.denominator.kind = Denominator::Kind::LPM;
  s.denominator.p = p;
  return s;
}

MeasureSpec MeasureSpec::avar_ratio(double level) {
  MeasureSpec s;
  s.kind = Kind::RewardRisk;
  s.denominator.kind = Denominator::Kind::AVaR;
  s.denominator.level = level;
  return s;
}

MeasureSpec MeasureSpec::exp_utility(double lambda) {
  return exp_utility(RiskAversion::fixed(lambda));
}

MeasureSpec MeasureSpec::exp_utility(RiskAversion lambda) {
  MeasureSpec s;
  s.kind = Kind::ExponentialUtility;
  s.lambda = std::move(lambda);
  return s;
}

MeasureSpec MeasureSpec::expected_utility(Utility u) {
  MeasureSpec s;
  s.kind = Kind::ExpectedUtility;
  s.utility = std::move(u);
  return s;
}

MeasureSpec MeasureSpec::certainty_equivalent(Utility u) {
  MeasureSpec s;
  s.kind = Kind::CertaintyEquivalent;
  s.utility = std::move(u);
  return s;
}

MeasureSpec MeasureSpec::cond_expectation(std::vector<double> q) {
  MeasureSpec s;
  s.kind = Kind::CondExpectation;
  s.q = std::move(q);
  return s;
}

std::string MeasureSpec::kind_name() const {
  switch (kind) {
    case Kind::CondExpectation: return "cond_expectation";
    case Kind::ExpectedUtility: return "expected_utility";
    case Kind::ExponentialUtility: return "exp_utility";
    case Kind::CertaintyEquivalent: return "certainty_equivalent";
    case Kind::GainLoss: return "glr";
    case Kind::RewardRisk: return "reward_risk";
  }
  return "unknown";
}

// ---- Measure base -----------------------------------------------------------

Measure::Measure(MeasureSpec spec, SpacePtr space, double eps_strict)
    : spec_(std::move(spec)), space_(std::move(space)), eps_strict_(eps_strict) {
  if (!space_) throw DomainError("measure without space");
  if (!(eps_strict_ > 0.0)) throw ValidationError("tolerance_positive", "eps_strict must be positive");
}

TVar Measure::evaluate(std::size_t t, const XVar& x) const {
  space_->check_stage(t);
  if (!same_space(space_, x.space_ptr()))
    throw DomainError("variable and measure live on different spaces");
  std::vector<double> out(space_->atom_count(t));
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = eval_atom(t, a, x.values(), nullptr);
  return TVar(space_, t, std::move(out));
}

std::vector<bool> Measure::strict_ties(std::size_t t, const XVar& x) const {
  space_->check_stage(t);
  std::vector<bool> out(space_->atom_count(t));
  for (std::size_t a = 0; a < out.size(); ++a) {
    bool tie = false;
    eval_atom(t, a, x.values(), &tie);
    out[a] = tie;
  }
  return out;
}

double avar_on_atom(std::span<const double> values, std::span<const double> probs,
                    double level) {
  // worst outcomes first, each carrying at most p / level of the budget
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double mass = 0.0;
  for (double p : probs) mass += p;
  double remaining = 1.0, acc = 0.0;
  for (std::size_t i : order) {
    if (remaining <= 0.0) break;
    double w = std::min(probs[i] / mass / level, remaining);
    acc = ext::add(acc, ext::mul(w, -values[i]));
    remaining -= w;
  }
  return acc;
}

namespace {

class CondExpectationMeasure final : public Measure {
 public:
  CondExpectationMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    if (spec_.q.empty()) {
      weights_.assign(space_->probabilities().begin(), space_->probabilities().end());
    } else {
      if (spec_.q.size() != space_->leaf_count())
        throw ValidationError("measure_shape", "q needs one weight per leaf");
      double total = 0.0;
      for (double w : spec_.q) {
        if (!(w > 0.0) || !std::isfinite(w))
          throw ValidationError("measure_positive", "q must be strictly positive on every leaf");
        total += w;
      }
      if (std::fabs(total - 1.0) > 1e-10)
        throw ValidationError("probabilities_sum_to_one", "q must sum to 1");
      weights_ = spec_.q;
    }
  }
  std::string name() const override { return "cond_expectation"; }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool*) const override {
    double mass = 0.0, acc = 0.0;
    for (std::size_t leaf : space_->atom_leaves(t, atom)) {
      mass += weights_[leaf];
      acc = ext::add(acc, ext::mul(weights_[leaf], x[leaf]));
    }
    return std::isinf(acc) ? acc : acc / mass;
  }

 private:
  std::vector<double> weights_;
};

class ExpectedUtilityMeasure final : public Measure {
 public:
  ExpectedUtilityMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    spec_.utility.validate();
    if (!spec_.endowment.empty()) {
      if (spec_.endowment.size() != space_->leaf_count())
        throw ValidationError("measure_shape", "endowment needs one value per leaf");
      for (double w : spec_.endowment)
        if (!std::isfinite(w))
          throw ValidationError("endowment_bounded", "endowment must be finite");
    }
    z_u_ = spec_.utility.sup_value();
  }
  std::string name() const override { return "expected_utility[" + spec_.utility.name() + "]"; }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool*) const override {
    double acc = 0.0;
    for (std::size_t leaf : space_->atom_leaves(t, atom)) {
      double w = spec_.endowment.empty() ? 0.0 : spec_.endowment[leaf];
      acc = ext::add(acc, ext::mul(space_->probability(leaf),
                                   spec_.utility.value(ext::add(x[leaf], w))));
    }
    return std::isinf(acc) ? acc : acc / space_->atom_probability(t, atom);
  }
};

class ExponentialUtilityMeasure final : public Measure {
 public:
  ExponentialUtilityMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    spec_.lambda.validate(*space_);
    z_u_ = 1.0;
  }
  std::string name() const override { return "exp_utility"; }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool*) const override {
    double lambda = spec_.lambda.at(t, atom);
    double acc = 0.0;
    for (std::size_t leaf : space_->atom_leaves(t, atom)) {
      if (x[leaf] == kInf) continue;  // e^{-inf} = 0
      acc += space_->probability(leaf) * std::exp(-lambda * x[leaf]);
    }
    return 1.0 - acc / space_->atom_probability(t, atom);
  }
};

class CertaintyEquivalentMeasure final : public Measure {
 public:
  CertaintyEquivalentMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    spec_.utility.validate();
    if (!spec_.utility.strictly_increasing())
      throw ValidationError("utility_strictly_increasing",
                            "certainty equivalent needs a strictly increasing utility");
  }
  std::string name() const override {
    return "certainty_equivalent[" + spec_.utility.name() + "]";
  }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool*) const override {
    auto leaves = space_->atom_leaves(t, atom);
    std::vector<double> v, w;
    v.reserve(leaves.size());
    w.reserve(leaves.size());
    for (std::size_t leaf : leaves) {
      v.push_back(x[leaf]);
      w.push_back(space_->probability(leaf));
    }
    return spec_.utility.certainty_equivalent(v, w);
  }
};

class GainLossMeasure final : public Measure {
 public:
  GainLossMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    z_d_ = 0.0;
  }
  std::string name() const override { return "glr"; }
  bool scale_invariant_candidate() const override { return true; }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool* tie) const override {
    double mass = space_->atom_probability(t, atom);
    double e = 0.0, loss = 0.0;
    for (std::size_t leaf : space_->atom_leaves(t, atom)) {
      double p = space_->probability(leaf);
      e = ext::add(e, ext::mul(p, x[leaf]));
      if (x[leaf] < 0.0) loss += p * -x[leaf];
    }
    if (!std::isinf(e)) e /= mass;
    loss /= mass;
    if (tie && e > -eps_strict_ && e <= eps_strict_) *tie = true;
    if (!(e > eps_strict_)) return 0.0;
    if (loss == 0.0) return kInf;
    return e / loss;
  }
};

class RewardRiskMeasure final : public Measure {
 public:
  RewardRiskMeasure(MeasureSpec spec, SpacePtr space, double eps)
      : Measure(std::move(spec), std::move(space), eps) {
    spec_.utility.validate();
    if (!(spec_.utility.sup_value() > 0.0))
      throw ValidationError("utility_positive_at_infinity", "reward utility needs U(+inf) > 0");
    const auto& d = spec_.denominator;
    if (d.kind == Denominator::Kind::LPM && !(d.p >= 1.0 && std::isfinite(d.p)))
      throw ValidationError("lpm_order", "LPM order p must be >= 1");
    if (d.kind == Denominator::Kind::AVaR && !(d.level > 0.0 && d.level < 1.0))
      throw ValidationError("avar_level", "AVaR level must lie in (0, 1)");
    z_d_ = 0.0;
  }
  std::string name() const override {
    const auto& d = spec_.denominator;
    std::string den = d.kind == Denominator::Kind::LPM ? "lpm(" + fmt(d.p) + ")"
                                                        : "avar(" + fmt(d.level) + ")";
    return "reward_risk[" + spec_.utility.name() + "/" + den + "]";
  }
  bool scale_invariant_candidate() const override {
    return spec_.utility.positively_homogeneous();
  }
  double eval_atom(std::size_t t, std::size_t atom, std::span<const double> x,
                   bool* tie) const override {
    auto leaves = space_->atom_leaves(t, atom);
    double mass = space_->atom_probability(t, atom);
    double reward = 0.0;
    for (std::size_t leaf : leaves)
      reward = ext::add(reward, ext::mul(space_->probability(leaf), spec_.utility.value(x[leaf])));
    if (!std::isinf(reward)) reward /= mass;
    if (tie && reward > -eps_strict_ && reward <= eps_strict_) *tie = true;

    const auto& d = spec_.denominator;
    double sigma = 0.0;
    if (d.kind == Denominator::Kind::LPM) {
      double acc = 0.0;
      for (std::size_t leaf : leaves)
        if (x[leaf] < 0.0) acc += space_->probability(leaf) * std::pow(-x[leaf], d.p);
      sigma = std::pow(acc / mass, 1.0 / d.p);
    } else {
      std::vector<double> v, w;
      for (std::size_t leaf : leaves) {
        v.push_back(x[leaf]);
        w.push_back(space_->probability(leaf));
      }
      sigma = std::max(avar_on_atom(v, w, d.level), 0.0);
    }
    if (d.infinite_on_nonpositive_risk && sigma == 0.0) return kInf;
    if (!(reward > eps_strict_)) return 0.0;
    if (sigma == 0.0) return kInf;
    return reward / sigma;
  }

 private:
  static std::string fmt(double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
};

void check_declared(const Measure& m, const MeasureSpec& spec) {
  if (spec.z_d && !ext::near(*spec.z_d, m.lower_bound(), 1e-12))
    throw ValidationError("declared_bounds", "declared z_d does not match the measure");
  if (spec.z_u && !ext::near(*spec.z_u, m.upper_bound(), 1e-12))
    throw ValidationError("declared_bounds", "declared z_u does not match the measure");
}

}  // namespace

MeasurePtr make_measure(const MeasureSpec& spec, SpacePtr space, double eps_strict) {
  MeasurePtr m;
  switch (spec.kind) {
    case MeasureSpec::Kind::CondExpectation:
      m = std::make_shared<CondExpectationMeasure>(spec, space, eps_strict);
      break;
    case MeasureSpec::Kind::ExpectedUtility:
      m = std::make_shared<ExpectedUtilityMeasure>(spec, space, eps_strict);
      break;
    case MeasureSpec::Kind::ExponentialUtility:
      m = std::make_shared<ExponentialUtilityMeasure>(spec, space, eps_strict);
      break;
    case MeasureSpec::Kind::CertaintyEquivalent:
      m = std::make_shared<CertaintyEquivalentMeasure>(spec, space, eps_strict);
      break;
    case MeasureSpec::Kind::GainLoss:
      m = std::make_shared<GainLossMeasure>(spec, space, eps_strict);
      break;
    case MeasureSpec::Kind::RewardRisk:
      m = std::make_shared<RewardRiskMeasure>(spec, space, eps_strict);
      break;
  }
  check_declared(*m, spec);
  if (!(m->lower_bound() < m->upper_bound()))
    throw ValidationError("bounds_ordered", "z_d must be below z_u");
  return m;
}

}  // namespace perflat
