#include "perflat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "perflat/parallel.hpp"
#include "perflat/random.hpp"
#include "perflat/risk_family.hpp"

namespace perflat {

DynamicMeasure::DynamicMeasure(MeasurePtr m) : m_(std::move(m)) {
  if (!m_) throw DomainError("dynamic measure without a measure");
}

nlohmann::json Witness::to_json() const {
  return {{"x", values_json(x.values())},
          {"leaves", x.space().leaf_ids()},
          {"s", s},
          {"t", t},
          {"z", num_json(z)},
          {"atom_s", FilteredSpace::atom_id(s, atom_s)},
          {"margin", num_json(margin)}};
}

nlohmann::json ConsistencyReport::to_json() const {
  nlohmann::json j = report.to_json();
  j["verdict"] = counterexample ? "counterexample" : "consistent-on-sample";
  if (witness) j["witness"] = witness->to_json();
  return j;
}

bool verify_witness(const DynamicMeasure& d, const Witness& w, double tol_c) {
  const auto& sp = *d.space();
  TVar bs = d.evaluate(w.s, w.x), bt = d.evaluate(w.t, w.x);
  auto desc = sp.descendants(w.s, w.atom_s, w.t);
  for (std::size_t a : desc)
    if (!(bt[a] > w.z + 1e-9)) return false;
  if (!(bs[w.atom_s] <= w.z - 1e-9)) return false;
  Tolerances tol;
  tol.tol_c = tol_c;
  TVar rs = induce_risk(d.measure(), w.s, w.z, w.x, tol);
  TVar rt = induce_risk(d.measure(), w.t, w.z, w.x, tol);
  for (std::size_t a : desc)
    if (!(rt[a] < 0.0)) return false;
  return rs[w.atom_s] >= 0.0;
}

// ---- sampling checker -------------------------------------------------------

namespace {

struct TcTrial {
  std::size_t samples = 0, atoms = 0, ties = 0;
  std::size_t v_measure = 0, v_strict = 0, v_weak = 0;
  std::size_t adjacent_violations = 0, all_pair_violations = 0;
  std::optional<Witness> witness;
  std::optional<nlohmann::json> disagreement, strict_witness, weak_witness;
};

}  // namespace

ConsistencyReport check_time_consistency(const DynamicMeasure& d,
                                         std::span<const double> z_grid, std::size_t trials,
                                         std::uint64_t seed, const Tolerances& tol) {
  const auto& sp = d.space();
  if (sp->stage_count() < 2) throw DomainError("time consistency needs at least two stages");
  if (trials == 0) throw DomainError("trials must be at least 1");
  if (z_grid.empty()) throw DomainError("empty level grid");
  for (double z : z_grid)
    if (!(z > d.lower_bound() && z < d.upper_bound()))
      throw DomainError("grid level outside (z_d, z_u)");
  const std::size_t stages = sp->stage_count();

  std::vector<TcTrial> results(trials);
  parallel_for(trials, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    TcTrial& r = results[i];
    XVar x = random_xvar(rng, sp);
    std::vector<TVar> beta;
    std::vector<std::vector<TVar>> rho(stages);
    for (std::size_t t = 0; t < stages; ++t) {
      beta.push_back(d.evaluate(t, x));
      for (double z : z_grid) rho[t].push_back(induce_risk(d.measure(), t, z, x, tol));
    }
    for (std::size_t s = 0; s < stages; ++s)
      for (std::size_t t = s + 1; t < stages; ++t)
        for (std::size_t zi = 0; zi < z_grid.size(); ++zi) {
          const double z = z_grid[zi];
          ++r.samples;
          for (std::size_t b = 0; b < sp->atom_count(s); ++b) {
            ++r.atoms;
            auto desc = sp->descendants(s, b, t);
            bool p1 = true, p2 = true, p3 = true, tie = false;
            for (std::size_t a : desc) {
              p1 = p1 && beta[t][a] > z;
              p2 = p2 && rho[t][zi][a] < 0.0;
              p3 = p3 && rho[t][zi][a] <= 0.0;
              tie = tie || std::fabs(beta[t][a] - z) < 1e-6 || std::fabs(rho[t][zi][a]) < 1e-6;
            }
            tie = tie || std::fabs(beta[s][b] - z) < 1e-6 || std::fabs(rho[s][zi][b]) < 1e-6;
            bool v1 = p1 && !(beta[s][b] > z);
            bool v2 = p2 && !(rho[s][zi][b] < 0.0);
            bool v3 = p3 && !(rho[s][zi][b] <= 0.0);
            if (tie) {
              ++r.ties;
              continue;
            }
            r.v_measure += v1;
            r.v_strict += v2;
            r.v_weak += v3;
            if (v1) {
              (t == s + 1 ? r.adjacent_violations : r.all_pair_violations) += 1;
              if (!r.witness) {
                double mt = kInf;
                for (std::size_t a : desc) mt = std::min(mt, beta[t][a]);
                r.witness = Witness{x, s, t, z, b, std::min(mt - z, z - beta[s][b])};
              }
            }
            auto where = [&] {
              return nlohmann::json{{"x", values_json(x.values())}, {"s", s}, {"t", t},
                                    {"z", z}, {"atom_s", FilteredSpace::atom_id(s, b)}};
            };
            if (v2 && !r.strict_witness) r.strict_witness = where();
            if (v3 && !r.weak_witness) r.weak_witness = where();
            if ((v1 != v2 || v1 != v3) && !r.disagreement)
              r.disagreement = nlohmann::json{{"x", values_json(x.values())}, {"s", s}, {"t", t},
                                              {"z", z}, {"atom_s", FilteredSpace::atom_id(s, b)},
                                              {"measure_level", v1}, {"strict_risk", v2},
                                              {"weak_risk", v3}};
          }
        }
  });

  ConsistencyReport out;
  Report& rep = out.report;
  rep.subject = d.measure().name();
  auto& c1 = rep.add("measure_level");
  auto& c2 = rep.add("strict_risk");
  auto& c3 = rep.add("weak_risk");
  auto& agree = rep.add("criteria_agree");
  std::size_t samples = 0, adjacent = 0, all_pairs = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const TcTrial& r = results[i];
    samples += r.samples;
    for (auto* c : {&c1, &c2, &c3, &agree}) {
      c->checked += r.atoms - r.ties;
      c->ties += r.ties;
    }
    adjacent += r.adjacent_violations;
    all_pairs += r.all_pair_violations;
    if (r.v_measure && c1.passed) c1.fail("beta_t > z but beta_s <= z", r.witness->to_json());
    if (r.v_strict && c2.passed) c2.fail("rho_t < 0 but rho_s >= 0", *r.strict_witness);
    if (r.v_weak && c3.passed) c3.fail("rho_t <= 0 but rho_s > 0", *r.weak_witness);
    if (r.disagreement && agree.passed) agree.fail("criteria disagree", *r.disagreement);
    if (r.witness && !out.witness) out.witness = r.witness;
  }
  out.counterexample = out.witness.has_value();
  rep.info = {{"trials", trials},
              {"seed", seed},
              {"samples", samples},
              {"levels", z_grid.size()},
              {"adjacent_pair_violations", adjacent},
              {"nonadjacent_pair_violations", all_pairs},
              {"verdict", out.counterexample ? "counterexample" : "consistent-on-sample"}};
  return out;
}

// ---- counterexample search --------------------------------------------------

namespace {

struct Candidate {
  double margin = -kInf;
  std::vector<double> x;
  std::size_t s = 0, t = 0, atom = 0;
  double z = 0.0;

  // larger margin wins; ties go to the lexicographically smaller encoding
  bool better_than(const Candidate& o) const {
    if (margin != o.margin) return margin > o.margin;
    if (x != o.x) return x < o.x;
    return std::tie(s, t, atom) < std::tie(o.s, o.t, o.atom);
  }
};

Candidate score(const DynamicMeasure& d, const std::vector<double>& v) {
  const auto& sp = d.space();
  XVar x(sp, v);
  std::vector<TVar> beta;
  for (std::size_t t = 0; t < sp->stage_count(); ++t) beta.push_back(d.evaluate(t, x));
  Candidate best;
  best.x = v;
  for (std::size_t s = 0; s < sp->stage_count(); ++s)
    for (std::size_t t = s + 1; t < sp->stage_count(); ++t)
      for (std::size_t b = 0; b < sp->atom_count(s); ++b) {
        double mt = kInf;
        for (std::size_t a : sp->descendants(s, b, t)) mt = std::min(mt, beta[t][a]);
        double bs = beta[s][b];
        if (!(mt > bs) || std::isinf(bs)) continue;
        double gap = mt - bs;
        double z = bs + std::min(gap / 2.0, 1.0);
        double margin = std::min(mt - z, z - bs);
        if (margin > best.margin) {
          best.margin = margin;
          best.s = s;
          best.t = t;
          best.atom = b;
          best.z = z;
        }
      }
  return best;
}

}  // namespace

ConsistencyReport search_counterexample(const DynamicMeasure& d, std::size_t budget,
                                        std::uint64_t seed) {
  if (budget == 0) throw DomainError("budget must be at least 1");
  const auto& sp = d.space();
  constexpr std::size_t kChunks = 16;
  std::vector<Candidate> bests(kChunks);
  const std::size_t n = sp->leaf_count();

  parallel_for(kChunks, [&](std::size_t c) {
    std::size_t share = budget / kChunks + (c < budget % kChunks ? 1 : 0);
    if (share == 0) return;
    Rng rng(derive_seed(seed, c));
    Candidate best;
    std::size_t random_phase = std::max<std::size_t>(1, share * 3 / 4);
    double best_scale = 1.0;
    for (std::size_t i = 0; i < random_phase; ++i) {
      double scale = 5.0 * std::pow(10.0, rng.uniform(-1.0, 1.0));
      std::vector<double> v(n);
      for (double& x : v) x = rng.uniform(-1.0, 1.0) * scale;
      Candidate cand = score(d, v);
      if (cand.better_than(best)) {
        best = std::move(cand);
        best_scale = scale;
      }
    }
    // coordinate refinement around the best random point
    std::size_t left = share - random_phase;
    double step = 0.25 * best_scale;
    while (left > 0 && best.margin > -kInf && step > 1e-9) {
      bool improved = false;
      for (std::size_t i = 0; i < n && left > 0; ++i)
        for (double dir : {1.0, -1.0}) {
          if (left == 0) break;
          --left;
          std::vector<double> v = best.x;
          v[i] += dir * step;
          Candidate cand = score(d, v);
          if (cand.margin > best.margin) {
            best = std::move(cand);
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    bests[c] = std::move(best);
  });

  Candidate best;
  for (const auto& c : bests)
    if (c.better_than(best)) best = c;

  ConsistencyReport out;
  Report& rep = out.report;
  rep.subject = d.measure().name();
  rep.info = {{"budget", budget}, {"seed", seed}, {"chunks", kChunks}};
  auto& found = rep.add("no_counterexample");
  found.checked = budget;
  if (best.margin >= 1e-6) {
    Witness w{XVar(sp, best.x), best.s, best.t, best.z, best.atom, best.margin};
    bool ok = verify_witness(d, w, 1e-12);
    rep.info["reverified"] = ok;
    if (ok) {
      out.witness = w;
      out.counterexample = true;
      found.fail("time-consistency violation found", w.to_json());
    }
  }
  rep.info["best_margin"] = num_json(best.margin);
  rep.info["verdict"] = out.counterexample ? "counterexample" : "none-within-budget";
  return out;
}

std::optional<XVar> globalize_witness(const DynamicMeasure& d, const Witness& w) {
  const auto& sp = d.space();
  for (int k = 0; k <= 60; ++k) {
    double c = std::ldexp(1.0, k);
    XVar cx = XVar::constant(sp, c);
    TVar bt = d.evaluate(w.t, cx), bs = d.evaluate(w.s, cx);
    bool ok = true;
    for (double v : bt.values()) ok = ok && v > w.z;
    for (double v : bs.values()) ok = ok && v > w.z;
    if (!ok) continue;
    return paste(w.x, cx, EventMask::single(sp, w.s, w.atom_s));
  }
  return std::nullopt;
}

std::optional<Witness> localize_witness(const DynamicMeasure& d, const XVar& x, std::size_t s,
                                        std::size_t t, double z) {
  const auto& sp = *d.space();
  TVar bt = d.evaluate(t, x), bs = d.evaluate(s, x);
  for (double v : bt.values())
    if (!(v > z)) return std::nullopt;  // not a global violation
  for (std::size_t b = 0; b < bs.size(); ++b) {
    if (bs[b] > z) continue;
    double mt = kInf;
    for (std::size_t a : sp.descendants(s, b, t)) mt = std::min(mt, bt[a]);
    return Witness{x, s, t, z, b, std::min(mt - z, z - bs[b])};
  }
  return std::nullopt;
}

// ---- risk aversion ----------------------------------------------------------

PathwiseMonotonicity pathwise_monotonicity(const RiskAversion& lambda, const FilteredSpace& sp) {
  PathwiseMonotonicity out;
  if (lambda.constant) return out;
  for (std::size_t leaf = 0; leaf < sp.leaf_count(); ++leaf)
    for (std::size_t t = 0; t + 1 < sp.stage_count(); ++t) {
      double a = lambda.at(t, sp.atom_of(t, leaf));
      double b = lambda.at(t + 1, sp.atom_of(t + 1, leaf));
      if (b < a) out.nondecreasing = false;
      if (b > a) out.nonincreasing = false;
    }
  return out;
}

Report check_riskaversion_monotone_consistency(SpacePtr space, const RiskAversion& lambda,
                                               std::span<const double> z_grid,
                                               std::size_t trials, std::uint64_t seed) {
  DynamicMeasure d(make_measure(MeasureSpec::exp_utility(lambda), space));
  ConsistencyReport sampled = check_time_consistency(d, z_grid, trials, seed);
  ConsistencyReport searched = search_counterexample(d, std::max<std::size_t>(trials, 64), seed);
  bool consistent = !sampled.counterexample && !searched.counterexample;
  PathwiseMonotonicity mono = pathwise_monotonicity(lambda, *space);

  Report rep;
  rep.subject = "exp_utility risk aversion";
  auto& up = rep.add("nondecreasing_orientation");
  auto& down = rep.add("nonincreasing_orientation");
  up.checked = down.checked = 1;
  const ConsistencyReport& witness_src = sampled.counterexample ? sampled : searched;
  nlohmann::json w = witness_src.witness ? witness_src.witness->to_json() : nlohmann::json();
  if (mono.nondecreasing && !consistent)
    up.fail("pathwise nondecreasing risk aversion but a violation was found", w);
  if (mono.nonincreasing && !consistent)
    down.fail("pathwise nonincreasing risk aversion but a violation was found", w);
  up.detail = mono.nondecreasing ? "premise holds" : "premise fails";
  down.detail = mono.nonincreasing ? "premise holds" : "premise fails";
  rep.info = {{"pathwise_nondecreasing", mono.nondecreasing},
              {"pathwise_nonincreasing", mono.nonincreasing},
              {"constant", lambda.constant.has_value()},
              {"verdict", consistent ? "consistent-on-sample" : "counterexample"},
              {"trials", trials},
              {"seed", seed}};
  if (!w.is_null()) rep.info["witness"] = w;
  return rep;
}

// ---- penalty nesting for GLR ------------------------------------------------

Report check_penalty_inequality_coherent(const DynamicMeasure& d, double z, std::size_t s,
                                         std::size_t t, std::size_t q_samples,
                                         std::uint64_t seed) {
  if (d.measure().spec().kind != MeasureSpec::Kind::GainLoss)
    throw DomainError("penalty nesting is implemented for the gain-loss ratio only");
  if (!(s < t)) throw DomainError("need s < t");
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("level must be finite and positive");
  const auto& sp = d.space();
  sp->check_stage(t);

  Report rep;
  rep.subject = "penalty:" + d.measure().name();
  auto& ineq = rep.add("penalty_inequality");
  std::size_t s_feasible = 0, t_feasible = 0, t_not_s = 0;
  Rng rng(seed);
  const std::size_t n = sp->leaf_count();

  auto test_q = [&](const std::vector<double>& q, const char* kind) {
    auto fs = glr_dual_feasible(*sp, s, z, q);
    auto ft = glr_dual_feasible(*sp, t, z, q);
    for (std::size_t b = 0; b < fs.size(); ++b) {
      ++ineq.checked;
      // E^Q_s[alpha_t] on b: +inf if some F_t atom below b with Q mass fails
      bool lhs_inf = false, all_t = true;
      for (std::size_t a : sp->descendants(s, b, t)) {
        double mass = 0.0;
        for (std::size_t leaf : sp->atom_leaves(t, a)) mass += q[leaf];
        if (!ft[a]) {
          all_t = false;
          if (mass > 0.0) lhs_inf = true;
        }
      }
      bool rhs_inf = !fs[b];
      s_feasible += fs[b];
      t_feasible += all_t;
      if (all_t && !fs[b]) ++t_not_s;
      if (lhs_inf && !rhs_inf)
        ineq.fail("E^Q_s[alpha_t] exceeds alpha_s",
                  {{"q", q}, {"kind", kind}, {"atom_s", FilteredSpace::atom_id(s, b)}});
    }
  };

  for (std::size_t k = 0; k < q_samples; ++k) {
    // random Q agreeing with P on F_s
    std::vector<double> q(n);
    double spread = std::log1p(z) * rng.uniform(0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) q[i] = sp->probability(i) * std::exp(rng.uniform(-spread, spread));
    for (std::size_t b = 0; b < sp->atom_count(s); ++b) {
      double m = 0.0;
      for (std::size_t leaf : sp->atom_leaves(s, b)) m += q[leaf];
      for (std::size_t leaf : sp->atom_leaves(s, b)) q[leaf] *= sp->atom_probability(s, b) / m;
    }
    test_q(q, "random");

    XVar x = random_xvar(rng, sp);
    // vertex of the stage-t polytope, F_t atoms keep their P mass
    DualSolution dt = glr_dual_solve(t, z, x);
    std::vector<double> qt(n);
    for (std::size_t i = 0; i < n; ++i)
      qt[i] = dt.q[i] * sp->atom_probability(t, sp->atom_of(t, i));
    test_q(qt, "t_vertex");
    // vertex of the stage-s polytope
    DualSolution ds = glr_dual_solve(s, z, x);
    std::vector<double> qs(n);
    for (std::size_t i = 0; i < n; ++i)
      qs[i] = ds.q[i] * sp->atom_probability(s, sp->atom_of(s, i));
    test_q(qs, "s_vertex");
  }
  // Q = P is feasible everywhere
  test_q(std::vector<double>(sp->probabilities().begin(), sp->probabilities().end()), "P");

  rep.info = {{"z", z},
              {"s", s},
              {"t", t},
              {"seed", seed},
              {"s_feasible_atoms", s_feasible},
              {"t_feasible_atoms", t_feasible},
              {"t_feasible_but_not_s", t_not_s}};
  return rep;
}

}  // namespace perflat
