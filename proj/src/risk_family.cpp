#include "perflat/risk_family.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perflat/random.hpp"
#include "perflat/simplex.hpp"

namespace perflat {

double invert_monotone(const std::function<bool(double)>& accept, double tol) {
  double lo = 0.0, hi = 0.0;
  if (accept(0.0)) {
    double c = -1.0;
    while (accept(c)) {
      if (c <= -kBracketCap) return -kInf;
      hi = c;
      c *= 2.0;
    }
    lo = c;
  } else {
    double c = 1.0;
    while (!accept(c)) {
      if (c >= kBracketCap)
        throw InconsistencyError("level never reached by adding cash up to 2^60");
      lo = c;
      c *= 2.0;
    }
    hi = c;
  }
  while (hi - lo > tol) {
    double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (accept(mid)) hi = mid;
    else lo = mid;
  }
  if (lo <= 0.0 && 0.0 <= hi) return 0.0;
  return lo + 0.5 * (hi - lo);
}

double invert_atom(const Measure& m, std::size_t t, std::size_t atom,
                   std::span<const double> x, double z, double tol_c) {
  std::vector<double> shifted(x.begin(), x.end());
  auto leaves = m.space()->atom_leaves(t, atom);
  auto accept = [&](double c) {
    for (std::size_t leaf : leaves) shifted[leaf] = ext::add(x[leaf], c);
    return m.eval_atom(t, atom, shifted, nullptr) >= z;
  };
  return invert_monotone(accept, tol_c);
}

namespace {

void check_level(const Measure& m, double z) {
  if (!(z > m.lower_bound() && z < m.upper_bound()))
    throw DomainError("level " + std::to_string(z) + " outside (z_d, z_u) of " + m.name());
}

}  // namespace

TVar induce_risk(const Measure& m, std::size_t t, double z, const XVar& x,
                 const Tolerances& tol) {
  std::vector<double> levels(m.space()->atom_count(t), z);
  return induce_risk(m, t, levels, x, tol);
}

TVar induce_risk(const Measure& m, std::size_t t, std::span<const double> levels,
                 const XVar& x, const Tolerances& tol) {
  m.space()->check_stage(t);
  if (!same_space(m.space(), x.space_ptr()))
    throw DomainError("variable and measure live on different spaces");
  if (levels.size() != m.space()->atom_count(t))
    throw DomainError("need one level per atom");
  std::vector<double> out(levels.size());
  for (std::size_t a = 0; a < out.size(); ++a) {
    check_level(m, levels[a]);
    out[a] = invert_atom(m, t, a, x.values(), levels[a], tol.tol_c);
  }
  return TVar(m.space(), t, std::move(out));
}

// ---- entropic closed form ---------------------------------------------------

TVar entropic_closed_form_log_level(const TVar& lambda, double w, const XVar& x) {
  const auto& sp = x.space();
  if (!same_space(lambda.space_ptr(), x.space_ptr()))
    throw DomainError("risk aversion and variable live on different spaces");
  const std::size_t t = lambda.stage();
  std::vector<double> out(sp.atom_count(t));
  for (std::size_t a = 0; a < out.size(); ++a) {
    double lam = lambda[a];
    if (!(lam > 0.0)) throw DomainError("risk aversion must be positive");
    auto leaves = sp.atom_leaves(t, a);
    double mn = kInf;
    for (std::size_t leaf : leaves) mn = std::min(mn, x[leaf]);
    if (mn == kInf) {  // e^{-inf} = 0 everywhere on the atom
      out[a] = -kInf;
      continue;
    }
    double acc = 0.0;
    for (std::size_t leaf : leaves)
      if (x[leaf] != kInf) acc += sp.probability(leaf) * std::exp(-lam * (x[leaf] - mn));
    double log_mgf = -lam * mn + std::log(acc / sp.atom_probability(t, a));
    out[a] = log_mgf / lam - w / lam;
  }
  return TVar(x.space_ptr(), t, std::move(out));
}

TVar entropic_closed_form(const TVar& lambda, double z, const XVar& x) {
  if (!(z < 1.0)) throw DomainError("entropic level must be below 1");
  return entropic_closed_form_log_level(lambda, std::log1p(-z), x);
}

TVar lambda_at(const RiskAversion& lambda, const SpacePtr& space, std::size_t t) {
  std::vector<double> v(space->atom_count(t));
  for (std::size_t a = 0; a < v.size(); ++a) v[a] = lambda.at(t, a);
  return TVar(space, t, std::move(v));
}

// ---- curves -----------------------------------------------------------------

LimitProbe probe_lower_limit(const std::function<TVar(double)>& rho_at_zero) {
  LimitProbe probe;
  for (int k = 0; k <= 1023; ++k) {
    double z = -std::ldexp(1.0, k);
    TVar r = rho_at_zero(z);
    double sup = *std::max_element(r.values().begin(), r.values().end());
    probe.trail.emplace_back(z, sup);
    probe.z = z;
    probe.sup_rho0 = sup;
    if (sup < -1e6) {
      probe.reached = true;
      break;
    }
  }
  return probe;
}

RiskCurve risk_curve(const Measure& m, std::size_t t, const XVar& x,
                     std::span<const double> grid, const Tolerances& tol, bool probe_limit) {
  if (grid.empty()) throw DomainError("empty level grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    check_level(m, grid[k]);
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw DomainError("level grid must be strictly increasing");
  }
  RiskCurve curve;
  curve.t = t;
  curve.levels.assign(grid.begin(), grid.end());
  for (double z : grid) curve.values.push_back(induce_risk(m, t, z, x, tol));
  for (std::size_t k = 1; k < grid.size() && curve.monotone; ++k)
    for (std::size_t a = 0; a < curve.values[k].size(); ++a) {
      double prev = curve.values[k - 1][a], cur = curve.values[k][a];
      if (cur < prev && !ext::near_scaled(cur, prev, 1e-9)) {
        curve.monotone = false;
        curve.monotone_witness = {{"atom", FilteredSpace::atom_id(t, a)},
                                  {"z_low", grid[k - 1]},
                                  {"z_high", grid[k]},
                                  {"rho_low", num_json(prev)},
                                  {"rho_high", num_json(cur)}};
        break;
      }
    }
  if (probe_limit && m.lower_bound() == -kInf) {
    XVar zero = XVar::constant(m.space(), 0.0);
    curve.limit = probe_lower_limit([&](double z) { return induce_risk(m, t, z, zero, tol); });
  }
  return curve;
}

// ---- families ---------------------------------------------------------------

TVar StandardFamily::evaluate(double z, std::size_t t, const XVar& x) const {
  std::vector<double> levels(space->atom_count(t), z);
  return evaluate_levels(levels, t, x);
}

StandardFamily induced_family(MeasurePtr m, Tolerances tol) {
  StandardFamily f;
  f.z_d = m->lower_bound();
  f.z_u = m->upper_bound();
  f.space = m->space();
  f.name = "induced:" + m->name();
  f.provenance = "induced";
  f.evaluate_levels = [m, tol](std::span<const double> levels, std::size_t t, const XVar& x) {
    return induce_risk(*m, t, levels, x, tol);
  };
  return f;
}

StandardFamily entropic_family(SpacePtr space, RiskAversion lambda) {
  lambda.validate(*space);
  StandardFamily f;
  f.z_d = -kInf;
  f.z_u = 1.0;
  f.space = space;
  f.name = "entropic";
  f.provenance = "closed-form";
  f.evaluate_levels = [space, lambda](std::span<const double> levels, std::size_t t,
                                      const XVar& x) {
    TVar lam = lambda_at(lambda, space, t);
    std::vector<double> out(levels.size());
    for (std::size_t a = 0; a < levels.size(); ++a) {
      if (!(levels[a] < 1.0)) throw DomainError("entropic level must be below 1");
      // one closed-form evaluation per distinct level would do; atoms are few
      out[a] = entropic_closed_form_log_level(lam, std::log1p(-levels[a]), x)[a];
    }
    return TVar(space, t, std::move(out));
  };
  return f;
}

TVar reconstruct(const StandardFamily& f, std::size_t t, const XVar& x, const Tolerances& tol,
                 std::vector<bool>* near_zero) {
  tol.validate();
  const std::size_t atoms = f.space->atom_count(t);
  const double half_pi = std::numbers::pi / 2.0;
  const double u_d = f.z_d == -kInf ? -half_pi : std::atan(f.z_d);
  const double u_u = f.z_u == kInf ? half_pi : std::atan(f.z_u);
  double z_bot = std::tan(u_d + tol.tol_z);
  double z_top = std::tan(u_u - tol.tol_z);
  if (!(z_bot > f.z_d)) z_bot = std::nextafter(f.z_d, kInf);
  if (!(z_top < f.z_u)) z_top = std::nextafter(f.z_u, -kInf);
  if (!(z_bot < z_top)) throw DomainError("level interval too narrow to reconstruct");

  auto negative = [&](double s) { return s < -tol.tol_c; };
  std::vector<double> result(atoms, 0.0);
  std::vector<bool> done(atoms, false);

  TVar bot = f.evaluate(z_bot, t, x);
  for (std::size_t a = 0; a < atoms; ++a)
    if (!negative(bot[a])) {
      result[a] = f.z_d;
      done[a] = true;
    }
  TVar top = f.evaluate(z_top, t, x);
  for (std::size_t a = 0; a < atoms; ++a)
    if (!done[a] && negative(top[a])) {
      result[a] = f.z_u;
      done[a] = true;
    }

  // invariant: sigma(tan lo) negative, sigma(tan hi) not negative
  std::vector<double> lo(atoms, std::atan(z_bot)), hi(atoms, std::atan(z_top));
  std::vector<double> levels(atoms);
  for (;;) {
    bool any = false;
    std::vector<double> mid(atoms);
    for (std::size_t a = 0; a < atoms; ++a) {
      if (done[a]) {
        levels[a] = z_bot;
        continue;
      }
      double zl = std::tan(lo[a]), zh = std::tan(hi[a]);
      mid[a] = lo[a] + 0.5 * (hi[a] - lo[a]);
      bool narrow = hi[a] - lo[a] <= tol.tol_z && zh - zl <= tol.tol_z;
      if (narrow || mid[a] <= lo[a] || mid[a] >= hi[a]) {
        result[a] = 0.5 * (zl + zh);
        done[a] = true;
        levels[a] = z_bot;
        continue;
      }
      levels[a] = std::tan(mid[a]);
      any = true;
    }
    if (!any) break;
    TVar s = f.evaluate_levels(levels, t, x);
    for (std::size_t a = 0; a < atoms; ++a) {
      if (done[a]) continue;
      if (negative(s[a])) lo[a] = mid[a];
      else hi[a] = mid[a];
    }
  }

  if (near_zero) {
    near_zero->assign(atoms, false);
    std::vector<double> at(atoms);
    std::vector<bool> interior(atoms, false);
    for (std::size_t a = 0; a < atoms; ++a) {
      interior[a] = result[a] > f.z_d && result[a] < f.z_u;
      at[a] = interior[a] ? result[a] : z_bot;
    }
    TVar s = f.evaluate_levels(at, t, x);
    for (std::size_t a = 0; a < atoms; ++a)
      (*near_zero)[a] = interior[a] && std::fabs(s[a]) < tol.tol_c;
  }
  return TVar(f.space, t, std::move(result));
}

// ---- standard-family validation ---------------------------------------------

namespace {

bool ge_tol(double a, double b, double tol) {
  // a >= b up to a tolerance scaled by the magnitudes
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return a > b;
  return a >= b - tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

nlohmann::json xvar_json(const XVar& x) { return values_json(x.values()); }

}  // namespace

Report validate_standard_family(const StandardFamily& f, std::size_t trials,
                                std::span<const double> z_grid, std::uint64_t seed,
                                const Tolerances& tol) {
  Report rep;
  rep.subject = f.name;
  rep.info["provenance"] = f.provenance;
  rep.info["seed"] = seed;
  rep.info["trials"] = trials;
  tol.validate();
  // the family itself may be computed by bisection to tol_c
  const double slack = std::max(1e-9, 10.0 * tol.tol_c);
  if (z_grid.empty()) throw DomainError("empty level grid");
  for (double z : z_grid)
    if (!(z > f.z_d && z < f.z_u)) throw DomainError("grid level outside (z_d, z_u)");

  auto& a1 = rep.add("a1_finite_on_bounded");
  auto& a2 = rep.add("a2_convex");
  auto& a3 = rep.add("a3_monotone");
  auto& a4 = rep.add("a4_translation_invariant");
  auto& a5 = rep.add("a5_local");
  auto& a6 = rep.add("a6_continuous_from_below");
  auto& b1 = rep.add("b_nondecreasing_in_z");
  auto& b2 = rep.add("b_continuous_in_z");
  auto& c = rep.add("c_lower_limit");

  const auto& sp = f.space;
  const std::size_t T = sp->horizon();
  bool coherent = true;
  Rng rng(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::size_t t = rng.index(0, T);
    double z = z_grid[rng.index(0, z_grid.size() - 1)];
    XVar x = random_xvar(rng, sp);
    XVar y = random_xvar(rng, sp);
    TVar sx = f.evaluate(z, t, x);
    TVar sy = f.evaluate(z, t, y);
    auto wit = [&](nlohmann::json extra) {
      extra["t"] = t;
      extra["z"] = z;
      extra["x"] = xvar_json(x);
      return extra;
    };

    ++a1.checked;
    for (std::size_t a = 0; a < sx.size(); ++a)
      if (!std::isfinite(sx[a])) a1.fail("infinite risk on a bounded position", wit({{"atom", a}}));

    double w = rng.uniform();
    TVar sc = f.evaluate(z, t, convex_combination(w, x, y));
    ++a2.checked;
    for (std::size_t a = 0; a < sc.size(); ++a)
      if (!ge_tol(w * sx[a] + (1 - w) * sy[a], sc[a], 1e-8))
        a2.fail("convexity violated", wit({{"y", xvar_json(y)}, {"c", w}, {"atom", a}}));

    std::vector<double> delta(sp->leaf_count());
    for (double& d : delta) d = rng.coin(0.3) ? 0.0 : rng.uniform(0.0, 2.0);
    XVar bigger = x + XVar(sp, delta);
    TVar sb = f.evaluate(z, t, bigger);
    ++a3.checked;
    for (std::size_t a = 0; a < sb.size(); ++a)
      if (!ge_tol(sx[a], sb[a], slack))
        a3.fail("risk increased on a larger position", wit({{"larger", xvar_json(bigger)}, {"atom", a}}));

    TVar xi = random_tvar(rng, sp, t, -3.0, 3.0);
    TVar sxi = f.evaluate(z, t, x + xi);
    ++a4.checked;
    for (std::size_t a = 0; a < sxi.size(); ++a)
      if (!ext::near_scaled(sxi[a], sx[a] - xi[a], 1e-8))
        a4.fail("translation invariance violated",
                wit({{"xi", values_json(xi.values())}, {"atom", a}}));

    EventMask b = random_event(rng, sp, t);
    TVar sl = f.evaluate(z, t, restrict_to(x, b));
    ++a5.checked;
    for (std::size_t a = 0; a < sl.size(); ++a)
      if (b.contains_atom(a) && !ext::near_scaled(sl[a], sx[a], slack))
        a5.fail("locality violated", wit({{"atom", a}}));

    ++a6.checked;
    std::vector<double> prev(sx.size(), kInf);
    TVar last = sx;
    for (double n = 1e2; n <= 1e8; n *= 10.0) {
      last = f.evaluate(z, t, x - 1.0 / n);
      for (std::size_t a = 0; a < last.size(); ++a) {
        if (!ge_tol(prev[a], last[a], slack))
          a6.fail("risk not nonincreasing along X - 1/n", wit({{"n", n}, {"atom", a}}));
        prev[a] = last[a];
      }
    }
    for (std::size_t a = 0; a < last.size(); ++a)
      if (!ext::near_scaled(last[a], sx[a], 1e-6))
        a6.fail("risk along X - 1/n does not converge to the risk of X", wit({{"atom", a}}));

    ++b1.checked;
    std::vector<double> below(sx.size(), -kInf);
    for (double zz : z_grid) {
      TVar s = f.evaluate(zz, t, x);
      for (std::size_t a = 0; a < s.size(); ++a) {
        if (!ge_tol(s[a], below[a], slack))
          b1.fail("risk decreases in the level", wit({{"z_high", zz}, {"atom", a}}));
        below[a] = s[a];
      }
    }

    double dz = 1e-6 * std::max(1.0, std::fabs(z));
    if (z + dz < f.z_u) {
      ++b2.checked;
      TVar s2 = f.evaluate(z + dz, t, x);
      for (std::size_t a = 0; a < s2.size(); ++a)
        if (std::fabs(s2[a] - sx[a]) > 1e-3 * std::max(1.0, std::fabs(sx[a])))
          b2.fail("jump in the level", wit({{"dz", dz}, {"atom", a}}));
    }

    double k = rng.uniform(0.1, 10.0);
    TVar sk = f.evaluate(z, t, k * x);
    for (std::size_t a = 0; a < sk.size(); ++a)
      if (!ext::near_scaled(sk[a], k * sx[a], 1e-7)) coherent = false;
  }

  ++c.checked;
  if (f.z_d == -kInf) {
    XVar zero = XVar::constant(sp, 0.0);
    LimitProbe probe = probe_lower_limit([&](double z) { return f.evaluate(z, 0, zero); });
    nlohmann::json trail = nlohmann::json::array();
    for (auto [z, v] : probe.trail) trail.push_back({num_json(z), num_json(v)});
    c.detail = probe.reached ? "reached" : "trend";
    if (!probe.reached) {
      // divergence heuristic: the decrements along z = -2^k must not shrink
      // geometrically
      const auto& tr = probe.trail;
      bool decreasing = true;
      for (std::size_t i = 1; i < tr.size(); ++i)
        if (tr[i].second > tr[i - 1].second + 1e-9) decreasing = false;
      bool diverging = decreasing && tr.size() >= 8;
      if (diverging) {
        std::size_t n = tr.size();
        double d1 = tr[n - 5].second - tr[n - 1].second;
        double d0 = tr[n - 8].second - tr[n - 5].second;
        diverging = d1 > 0.0 && d1 >= 0.5 * d0;
      }
      if (!diverging) c.fail("esssup sigma^z(0) does not diverge to -inf", {{"trail", trail}});
    }
    rep.info["lower_limit"] = {{"reached", probe.reached}, {"z", num_json(probe.z)},
                               {"sup_sigma0", num_json(probe.sup_rho0)}};
  } else {
    c.detail = "z_d finite";
  }
  rep.info["coherent"] = coherent;
  return rep;
}

// ---- GLR duality ------------------------------------------------------------

DualSolution glr_dual_solve(std::size_t t, double z, const XVar& x) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("dual level must be finite and positive");
  if (!x.is_finite()) throw DomainError("dual risk needs a finite variable");
  const auto& sp = x.space();
  std::vector<double> rho(sp.atom_count(t));
  std::vector<double> q(sp.leaf_count(), 0.0);
  for (std::size_t a = 0; a < rho.size(); ++a) {
    auto leaves = sp.atom_leaves(t, a);
    const std::size_t k = leaves.size();
    const double mass = sp.atom_probability(t, a);
    lp::Problem prob;
    prob.maximize = true;
    prob.objective.resize(k);
    for (std::size_t i = 0; i < k; ++i) prob.objective[i] = -x[leaves[i]];
    prob.constraints.push_back({std::vector<double>(k, 1.0), lp::Relation::Equal, 1.0});
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        std::vector<double> row(k, 0.0);
        double pi = sp.probability(leaves[i]) / mass, pj = sp.probability(leaves[j]) / mass;
        row[i] = pj;
        row[j] = -(1.0 + z) * pi;
        prob.constraints.push_back({std::move(row), lp::Relation::LessEqual, 0.0});
      }
    lp::Solution sol = lp::solve(prob);
    if (sol.status != lp::Status::Optimal)
      throw InconsistencyError(std::string("dual LP solver failed: ") + lp::to_string(sol.status));
    rho[a] = sol.objective;
    for (std::size_t i = 0; i < k; ++i) q[leaves[i]] = sol.x[i];
  }
  return DualSolution{TVar(x.space_ptr(), t, std::move(rho)), std::move(q)};
}

std::vector<bool> glr_dual_feasible(const FilteredSpace& sp, std::size_t t, double z,
                                    std::span<const double> q, double tol) {
  if (q.size() != sp.leaf_count()) throw DomainError("q needs one weight per leaf");
  std::vector<bool> ok(sp.atom_count(t), true);
  for (std::size_t a = 0; a < ok.size(); ++a) {
    auto leaves = sp.atom_leaves(t, a);
    double mass = sp.atom_probability(t, a);
    for (std::size_t i : leaves)
      for (std::size_t j : leaves) {
        if (i == j) continue;
        double pi = sp.probability(i) / mass, pj = sp.probability(j) / mass;
        if (q[i] * pj - (1.0 + z) * q[j] * pi > tol) ok[a] = false;
      }
  }
  return ok;
}

// ---- truncation, closure, penalty -------------------------------------------

Report truncation_limit_check(const Measure& m, std::size_t t, double z, const XVar& x,
                              std::span<const double> n_grid, const Tolerances& tol) {
  Report rep;
  rep.subject = "truncation:" + m.name();
  auto& mono = rep.add("nonincreasing_in_n");
  auto& lim = rep.add("converges_to_risk");
  TVar target = induce_risk(m, t, z, x, tol);
  std::vector<double> prev(target.size(), kInf);
  std::vector<TVar> seq;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (k > 0 && !(n_grid[k] > n_grid[k - 1]))
      throw DomainError("truncation grid must be strictly increasing");
    TVar r = induce_risk(m, t, z, truncate_above(x, n_grid[k]), tol);
    ++mono.checked;
    for (std::size_t a = 0; a < r.size(); ++a) {
      if (!ge_tol(prev[a], r[a], 1e-9))
        mono.fail("risk increased with n", {{"n", n_grid[k]}, {"atom", a}});
      prev[a] = r[a];
    }
    seq.push_back(std::move(r));
  }
  ++lim.checked;
  if (!seq.empty()) {
    const TVar& last = seq.back();
    for (std::size_t a = 0; a < last.size(); ++a) {
      if (target[a] == -kInf) {
        if (!(last[a] <= -1e6))
          lim.fail("truncated risk does not diverge", {{"atom", a}, {"last", num_json(last[a])}});
      } else if (!ext::near(last[a], target[a], 1e-6)) {
        lim.fail("truncated risk does not converge",
                 {{"atom", a}, {"last", num_json(last[a])}, {"target", num_json(target[a])}});
      }
    }
  }
  rep.info["target"] = values_json(target.values());
  return rep;
}

Report closure_check(const Measure& m, std::size_t t, double z, std::size_t trials,
                     std::uint64_t seed, const Tolerances& tol) {
  Report rep;
  rep.subject = "closure:" + m.name();
  rep.info["seed"] = seed;
  auto& push = rep.add("shift_into_strict_set");
  auto& limit = rep.add("limits_stay_weakly_acceptable");
  auto& remark = rep.add("weak_set_exceeds_acceptance_set");
  const auto& sp = m.space();
  Rng rng(seed);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    XVar y0 = random_xvar(rng, sp);
    TVar r0 = induce_risk(m, t, z, y0, tol);
    if (!r0.bounded_above() || !r0.bounded_below()) {
      ++push.ties;
      continue;
    }
    // move Y onto the boundary {rho = 0}
    XVar y = y0 + r0;
    for (double n = 1.0; n <= 1e6; n *= 10.0) {
      ++push.checked;
      TVar r = induce_risk(m, t, z, y + 1.0 / n, tol);
      for (std::size_t a = 0; a < r.size(); ++a)
        if (!(r[a] < 0.0))
          push.fail("Y + 1/n is not strictly acceptable",
                    {{"y", values_json(y.values())}, {"n", n}, {"atom", a}});
    }
    ++limit.checked;
    TVar r = induce_risk(m, t, z, y, tol);
    for (std::size_t a = 0; a < r.size(); ++a)
      if (!(r[a] <= 1e-9))
        limit.fail("limit of strictly acceptable positions has positive risk",
                   {{"y", values_json(y.values())}, {"atom", a}, {"rho", num_json(r[a])}});
  }
  // the zero position is weakly but not strictly acceptable for a CAI-type
  // measure with z_d = 0
  if (m.lower_bound() == 0.0) {
    XVar zero = XVar::constant(sp, 0.0);
    TVar r = induce_risk(m, t, z, zero, tol);
    TVar b = m.evaluate(t, zero);
    ++remark.checked;
    for (std::size_t a = 0; a < r.size(); ++a)
      if (!(r[a] <= 0.0 && b[a] < z))
        remark.fail("zero is not in the weak set minus the acceptance set", {{"atom", a}});
    remark.detail = "zero position probed";
  } else {
    remark.detail = "not applicable";
  }
  return rep;
}

TVar penalty_lower_bound(const Measure& m, std::size_t t, double z, std::span<const double> q,
                         const std::vector<XVar>& probes, const Tolerances& tol) {
  std::vector<double> best(m.space()->atom_count(t), -kInf);
  for (const auto& zk : probes) {
    std::vector<double> neg(zk.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -zk[i];
    // E^Q_t[-Z] needs -Z bounded below, so probes must be finite
    TVar e = cond_expect(XVar(zk.space_ptr(), neg), t, q);
    TVar r = induce_risk(m, t, z, zk, tol);
    for (std::size_t a = 0; a < best.size(); ++a) best[a] = std::max(best[a], ext::add(e[a], -r[a]));
  }
  return TVar(m.space(), t, std::move(best));
}

}  // namespace perflat
