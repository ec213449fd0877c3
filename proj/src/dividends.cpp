#include "perflat/dividends.hpp"

#include <algorithm>
#include <cmath>

#include "perflat/random.hpp"

namespace perflat {

DividendProcess::DividendProcess(SpacePtr space, std::map<std::size_t, TVar> payments)
    : space_(std::move(space)), payments_(std::move(payments)) {
  if (!space_) throw DomainError("dividend process without space");
  for (const auto& [r, d] : payments_) {
    space_->check_stage(r);
    if (d.stage() != r) throw ValidationError("payment_measurable", "payment keyed at stage " +
                                                                        std::to_string(r) +
                                                                        " is not F_r-measurable");
    if (!same_space(d.space_ptr(), space_))
      throw DomainError("payment lives on a different space");
    if (!d.bounded_below())
      throw ValidationError("payment_bounded_below", "payment at stage " + std::to_string(r) +
                                                         " is not bounded below");
  }
}

DividendProcess DividendProcess::zero(SpacePtr space) { return DividendProcess(space, {}); }

DividendProcess DividendProcess::terminal(const XVar& x) {
  const auto& sp = x.space_ptr();
  std::size_t T = sp->horizon();
  // at T atoms are singletons; map leaf order to atom order
  std::vector<double> v(sp->atom_count(T));
  for (std::size_t leaf = 0; leaf < x.size(); ++leaf) v[sp->atom_of(T, leaf)] = x[leaf];
  return DividendProcess(sp, {{T, TVar(sp, T, std::move(v))}});
}

TVar DividendProcess::payment(std::size_t r) const {
  space_->check_stage(r);
  auto it = payments_.find(r);
  if (it != payments_.end()) return it->second;
  return TVar::constant(space_, r, 0.0);
}

XVar DividendProcess::aggregate_from(std::size_t t) const {
  space_->check_stage(t);
  std::vector<double> v(space_->leaf_count(), 0.0);
  for (const auto& [r, d] : payments_) {
    if (r < t) continue;
    for (std::size_t leaf = 0; leaf < v.size(); ++leaf) v[leaf] = ext::add(v[leaf], d.at_leaf(leaf));
  }
  return XVar(space_, std::move(v));
}

DividendProcess DividendProcess::with_payment(std::size_t r, const TVar& d) const {
  auto p = payments_;
  p.insert_or_assign(r, d);
  return DividendProcess(space_, std::move(p));
}

DividendProcess DividendProcess::plus(const DividendProcess& other) const {
  if (!same_space(space_, other.space_)) throw DomainError("processes on different spaces");
  auto p = payments_;
  for (const auto& [r, d] : other.payments_) {
    auto it = p.find(r);
    if (it == p.end()) {
      p.emplace(r, d);
      continue;
    }
    std::vector<double> v(d.size());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = ext::add(it->second[a], d[a]);
    it->second = TVar(space_, r, std::move(v));
  }
  return DividendProcess(space_, std::move(p));
}

TVar lift_evaluate(const Measure& m, std::size_t t, const DividendProcess& d) {
  return m.evaluate(t, d.aggregate_from(t));
}

namespace {

bool ge_tol(double a, double b, double tol = 1e-9) {
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return a > b;
  return a >= b - tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// The F_t-measurable xi viewed as an F_r-measurable variable, r >= t.
TVar promote(const TVar& xi, std::size_t r) {
  const auto& sp = xi.space();
  std::vector<double> v(sp.atom_count(r));
  for (std::size_t a = 0; a < v.size(); ++a) v[a] = xi[sp.ancestor(xi.stage(), r, a)];
  return TVar(xi.space_ptr(), r, std::move(v));
}

DividendProcess random_process(Rng& rng, const SpacePtr& sp, double interim_lo,
                               double interim_hi) {
  std::map<std::size_t, TVar> p;
  const std::size_t T = sp->horizon();
  for (std::size_t r = 0; r <= T; ++r) {
    if (r < T && rng.coin(0.3)) continue;
    double lo = r == T ? -5.0 : interim_lo, hi = r == T ? 5.0 : interim_hi;
    p.emplace(r, random_tvar(rng, sp, r, lo, hi));
  }
  return DividendProcess(sp, std::move(p));
}

nlohmann::json process_json(const DividendProcess& d) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [r, v] : d.payments()) j[std::to_string(r)] = values_json(v.values());
  return j;
}

DividendProcess scaled(const DividendProcess& d, double c) {
  std::map<std::size_t, TVar> p;
  for (const auto& [r, v] : d.payments()) {
    std::vector<double> w(v.size());
    for (std::size_t a = 0; a < w.size(); ++a) w[a] = ext::mul(c, v[a]);
    p.emplace(r, TVar(d.space_ptr(), r, std::move(w)));
  }
  return DividendProcess(d.space_ptr(), std::move(p));
}

DividendProcess combine(double c, const DividendProcess& a, const DividendProcess& b) {
  return scaled(a, c).plus(scaled(b, 1.0 - c));
}

}  // namespace

Report check_lift_axioms(const Measure& m, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("trials must be at least 1");
  const auto& sp = m.space();
  const std::size_t T = sp->horizon();
  const double zd = m.lower_bound(), zu = m.upper_bound();
  Report rep;
  rep.subject = "lift:" + m.name();
  rep.info = {{"trials", trials}, {"seed", seed}};
  auto& p1 = rep.add("past_independence_locality");
  auto& p2 = rep.add("bounds");
  auto& p3 = rep.add("monotone");
  auto& p4 = rep.add("strict_shift");
  auto& p5 = rep.add("quasi_concave");
  auto& p6 = rep.add("timing_translation");
  auto& p7 = rep.add("scale_invariance");
  auto& bhat = rep.add("aggregation_identity");
  auto& trip = rep.add("terminal_restriction");
  bool cai = m.scale_invariant_candidate();
  p7.detail = cai ? "checked" : "not a scale-invariant candidate";

  Rng rng(seed);
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t t = rng.index(0, T);
    DividendProcess d = random_process(rng, sp, -3.0, 3.0);
    DividendProcess e = random_process(rng, sp, -3.0, 3.0);
    TVar ad = lift_evaluate(m, t, d), ae = lift_evaluate(m, t, e);
    auto w = [&](nlohmann::json extra) {
      extra["t"] = t;
      extra["d"] = process_json(d);
      return extra;
    };

    // 1. D' agrees with D on B from t on; before t and off B anything goes
    {
      EventMask b = random_event(rng, sp, t);
      std::map<std::size_t, TVar> mixed;
      for (std::size_t r = 0; r <= T; ++r) {
        TVar dr = d.payment(r), er = e.payment(r);
        std::vector<double> v(dr.size());
        for (std::size_t a = 0; a < v.size(); ++a) {
          bool on_b = r >= t && b.contains_atom(sp->ancestor(t, r, a));
          v[a] = on_b ? dr[a] : er[a];
        }
        mixed.emplace(r, TVar(sp, r, std::move(v)));
      }
      TVar am = lift_evaluate(m, t, DividendProcess(sp, std::move(mixed)));
      ++p1.checked;
      for (std::size_t a = 0; a < am.size(); ++a)
        if (b.contains_atom(a) && !ext::near_scaled(am[a], ad[a], 1e-9))
          p1.fail("value on B depends on payments off B or before t", w({{"atom", a}}));
    }

    // 2. range and extreme values
    {
      ++p2.checked;
      for (std::size_t a = 0; a < ad.size(); ++a)
        if (!ge_tol(ad[a], zd) || !ge_tol(zu, ad[a])) p2.fail("value outside [z_d, z_u]", w({{"atom", a}}));
      if (i == 0) {
        TVar top = lift_evaluate(m, t, DividendProcess::zero(sp).with_payment(T, TVar::constant(sp, T, kInf)));
        TVar low = lift_evaluate(
            m, t, DividendProcess::zero(sp).with_payment(t, TVar::constant(sp, t, -std::ldexp(1.0, 60))));
        for (std::size_t a = 0; a < top.size(); ++a) {
          if (!ext::near_scaled(top[a], zu, 1e-9)) p2.fail("sup differs from z_u", w({{"atom", a}}));
          bool ok = zd == -kInf ? low[a] <= -1e6 : ext::near_scaled(low[a], zd, 1e-9);
          if (!ok) p2.fail("large losses do not approach z_d", w({{"atom", a}}));
        }
      }
    }

    // 3. monotone in payments from t on
    {
      std::map<std::size_t, TVar> inc;
      for (std::size_t r = t; r <= T; ++r) inc.emplace(r, random_tvar(rng, sp, r, 0.0, 2.0));
      TVar ab = lift_evaluate(m, t, d.plus(DividendProcess(sp, std::move(inc))));
      ++p3.checked;
      for (std::size_t a = 0; a < ab.size(); ++a)
        if (!ge_tol(ab[a], ad[a])) p3.fail("larger payments lowered the value", w({{"atom", a}}));
    }

    // 4. strict increase under a positive constant paid at some r >= t
    {
      double c = rng.uniform(0.01, 2.0);
      std::size_t r = rng.index(t, T);
      DividendProcess dc = d.plus(DividendProcess::zero(sp).with_payment(r, TVar::constant(sp, r, c)));
      TVar ac = lift_evaluate(m, t, dc);
      auto t0 = m.strict_ties(t, d.aggregate_from(t)), t1 = m.strict_ties(t, dc.aggregate_from(t));
      ++p4.checked;
      for (std::size_t a = 0; a < ac.size(); ++a) {
        if (!(ad[a] < zu && ac[a] > zd)) continue;
        if (t0[a] || t1[a]) {
          ++p4.ties;
          continue;
        }
        if (!(ac[a] > ad[a]))
          p4.fail("no strict increase under a positive payment", w({{"atom", a}, {"c", c}, {"r", r}}));
      }
    }

    // 5. quasi-concavity
    {
      double c = rng.uniform();
      DividendProcess mix = combine(c, d, e);
      TVar am = lift_evaluate(m, t, mix);
      auto ta = m.strict_ties(t, d.aggregate_from(t)), tb = m.strict_ties(t, e.aggregate_from(t)),
           tm = m.strict_ties(t, mix.aggregate_from(t));
      ++p5.checked;
      for (std::size_t a = 0; a < am.size(); ++a) {
        if (ta[a] || tb[a] || tm[a]) {
          ++p5.ties;
          continue;
        }
        if (!ge_tol(am[a], std::min(ad[a], ae[a])))
          p5.fail("mixture below the minimum", w({{"atom", a}, {"c", c}, {"e", process_json(e)}}));
      }
    }

    // 6. moving an F_t-measurable transfer between dates r >= t
    {
      TVar xi = random_tvar(rng, sp, t, -3.0, 3.0);
      std::size_t r = rng.index(t, T);
      TVar now = lift_evaluate(m, t, d.plus(DividendProcess::zero(sp).with_payment(t, xi)));
      TVar later = lift_evaluate(m, t, d.plus(DividendProcess::zero(sp).with_payment(r, promote(xi, r))));
      ++p6.checked;
      for (std::size_t a = 0; a < now.size(); ++a)
        if (!ext::near_scaled(now[a], later[a], 1e-9))
          p6.fail("value depends on the payment date", w({{"atom", a}, {"r", r}}));
    }

    // 7. scale invariance for CAIs
    if (cai) {
      double c = rng.uniform(0.1, 10.0);
      DividendProcess dc = scaled(d, c);
      TVar ac = lift_evaluate(m, t, dc);
      auto t0 = m.strict_ties(t, d.aggregate_from(t)), t1 = m.strict_ties(t, dc.aggregate_from(t));
      ++p7.checked;
      for (std::size_t a = 0; a < ac.size(); ++a) {
        if (t0[a] || t1[a]) {
          ++p7.ties;
          continue;
        }
        if (!ext::near_scaled(ac[a], ad[a], 1e-9))
          p7.fail("value changes under scaling", w({{"atom", a}, {"c", c}}));
      }
    }

    {
      TVar agg = lift_evaluate(m, t, DividendProcess::terminal(d.aggregate_from(t)));
      ++bhat.checked;
      for (std::size_t a = 0; a < agg.size(); ++a)
        if (!(agg[a] == ad[a])) bhat.fail("aggregated terminal payment differs", w({{"atom", a}}));
    }

    {
      XVar x = random_xvar(rng, sp);
      TVar lifted = lift_evaluate(m, t, DividendProcess::terminal(x));
      TVar direct = m.evaluate(t, x);
      ++trip.checked;
      for (std::size_t a = 0; a < lifted.size(); ++a)
        if (!(lifted[a] == direct[a]))
          trip.fail("terminal restriction of the lift differs from the measure",
                    {{"t", t}, {"x", values_json(x.values())}, {"atom", a}});
    }
  }
  return rep;
}

Report check_lift_time_consistency(const DynamicMeasure& d, std::span<const double> z_grid,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t search_budget) {
  const auto& sp = d.space();
  if (sp->stage_count() < 2) throw DomainError("time consistency needs at least two stages");
  const std::size_t stages = sp->stage_count();
  const Measure& m = d.measure();

  ConsistencyReport vars = check_time_consistency(d, z_grid, trials, seed);
  std::optional<Witness> var_witness = vars.witness;
  if (!var_witness && search_budget > 0) {
    ConsistencyReport found = search_counterexample(d, search_budget, seed);
    var_witness = found.witness;
  }
  bool var_consistent = !var_witness.has_value();

  Report rep;
  rep.subject = "lift-consistency:" + m.name();
  auto& agree = rep.add("nonnegative_interim_agreement");
  auto& transport = rep.add("witness_transport");
  auto& terminal = rep.add("terminal_only_agreement");

  // process-level sampling, split by the sign of interim payments
  std::size_t viol_nonneg = 0, viol_signed = 0, viol_terminal = 0, samples = 0;
  nlohmann::json first_signed, first_nonneg;
  Rng rng(derive_seed(seed, 0xD1D));
  for (std::size_t i = 0; i < trials; ++i) {
    for (int cls = 0; cls < 3; ++cls) {
      DividendProcess proc =
          cls == 0 ? random_process(rng, sp, 0.0, 3.0)
                   : cls == 1 ? random_process(rng, sp, -3.0, 3.0)
                              : DividendProcess::terminal(random_xvar(rng, sp));
      std::vector<TVar> alpha;
      for (std::size_t t = 0; t < stages; ++t) alpha.push_back(lift_evaluate(m, t, proc));
      bool violated = false;
      for (std::size_t s = 0; s < stages && !violated; ++s)
        for (std::size_t t = s + 1; t < stages && !violated; ++t)
          for (double z : z_grid) {
            ++samples;
            for (std::size_t b = 0; b < sp->atom_count(s); ++b) {
              bool premise = true;
              for (std::size_t a : sp->descendants(s, b, t)) premise = premise && alpha[t][a] > z + 1e-6;
              if (premise && alpha[s][b] <= z - 1e-6) violated = true;
            }
            if (violated) break;
          }
      if (!violated) continue;
      if (cls == 0) {
        ++viol_nonneg;
        if (first_nonneg.is_null()) first_nonneg = process_json(proc);
      } else if (cls == 1) {
        ++viol_signed;
        if (first_signed.is_null()) first_signed = process_json(proc);
      } else {
        ++viol_terminal;
      }
    }
  }
  agree.checked = terminal.checked = trials;
  // with nonnegative interim payments the process verdict can only be
  // inconsistent when the variable-level one is
  if (var_consistent && viol_nonneg > 0)
    agree.fail("process violation with nonnegative interim payments for a consistent measure",
               first_nonneg);
  if (var_consistent && viol_terminal > 0)
    terminal.fail("process violation with a single terminal payment for a consistent measure", {});

  if (var_witness) {
    ++transport.checked;
    DividendProcess proc = DividendProcess::terminal(var_witness->x);
    TVar as = lift_evaluate(m, var_witness->s, proc), at = lift_evaluate(m, var_witness->t, proc);
    bool premise = true;
    for (std::size_t a : sp->descendants(var_witness->s, var_witness->atom_s, var_witness->t))
      premise = premise && at[a] > var_witness->z;
    if (!(premise && as[var_witness->atom_s] <= var_witness->z))
      transport.fail("variable witness does not transport to the process level",
                     var_witness->to_json());
    rep.info["variable_witness"] = var_witness->to_json();
  } else {
    transport.detail = "no variable-level witness";
  }
  rep.info["variable_verdict"] = var_consistent ? "consistent-on-sample" : "counterexample";
  rep.info["process_violations_nonnegative_interim"] = viol_nonneg;
  rep.info["process_violations_signed_interim"] = viol_signed;
  rep.info["process_violations_terminal_only"] = viol_terminal;
  rep.info["samples"] = samples;
  rep.info["trials"] = trials;
  rep.info["seed"] = seed;
  if (!first_signed.is_null()) rep.info["signed_interim_example"] = first_signed;
  return rep;
}

}  // namespace perflat
