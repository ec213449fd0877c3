#include "perflat/axioms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "perflat/parallel.hpp"
#include "perflat/random.hpp"
#include "perflat/risk_family.hpp"

namespace perflat {

namespace {

constexpr std::size_t kChecks = 7;
enum Idx { kQuasi, kBounds, kMono, kStrict, kCont, kLocal, kLevel };

struct Outcome {
  std::size_t checked = 0;
  std::size_t ties = 0;
  std::optional<std::pair<std::string, nlohmann::json>> failure;

  void fail(std::string why, nlohmann::json w) {
    if (!failure) failure.emplace(std::move(why), std::move(w));
  }
};

using Trial = std::array<Outcome, kChecks>;

bool ge_tol(double a, double b, double tol = 1e-9) {
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return a > b;
  return a >= b - tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

nlohmann::json xj(const XVar& x) { return values_json(x.values()); }

std::vector<double> interior_levels(const Measure& m) {
  const double half_pi = std::numbers::pi / 2.0;
  double ud = m.lower_bound() == -kInf ? -half_pi : std::atan(m.lower_bound());
  double uu = m.upper_bound() == kInf ? half_pi : std::atan(m.upper_bound());
  std::vector<double> out;
  for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) out.push_back(std::tan(ud + f * (uu - ud)));
  return out;
}

// Checks that values[k] is nondecreasing and approaches `limit` per atom.
// `ratio` is the growth factor demanded per step when the limit is +inf.
void check_sequence(Outcome& o, const std::vector<TVar>& seq, const TVar& limit,
                    const std::vector<bool>& skip, double ratio, const nlohmann::json& w) {
  for (std::size_t a = 0; a < limit.size(); ++a) {
    if (skip[a]) continue;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (k > 0 && !ge_tol(seq[k][a], seq[k - 1][a]))
        o.fail("values decrease along an increasing sequence", w);
      if (!ge_tol(limit[a], seq[k][a])) o.fail("sequence exceeds the limit value", w);
    }
    double last = seq.back()[a];
    double L = limit[a];
    if (std::isfinite(L)) {
      if (!(std::fabs(last - L) <= 1e-4 * std::max(1.0, std::fabs(L))))
        o.fail("sequence does not converge to the value at the limit", w);
    } else if (L == kInf) {
      double before = seq.size() > 1 ? seq[seq.size() - 2][a] : 0.0;
      bool ok = last == kInf || last >= 1e6 || (before > 0.0 && last >= ratio * before);
      if (!ok) o.fail("sequence does not diverge to +inf", w);
    }
  }
}

Trial run_trial(const Measure& m, std::size_t t, Rng& rng, bool first,
                const std::vector<double>& levels) {
  Trial r;
  const auto& sp = m.space();
  const double zd = m.lower_bound(), zu = m.upper_bound();
  XVarShape shape;
  shape.inf_probability = 0.05;
  XVar x = random_xvar(rng, sp, shape);
  XVar y = random_xvar(rng, sp, shape);
  TVar bx = m.evaluate(t, x), by = m.evaluate(t, y);
  auto tx = m.strict_ties(t, x), ty = m.strict_ties(t, y);
  const std::size_t atoms = bx.size();
  auto id = [&](std::size_t a) { return FilteredSpace::atom_id(t, a); };

  // 1. quasi-concavity
  {
    auto& o = r[kQuasi];
    double c = rng.uniform();
    XVar z = convex_combination(c, x, y);
    TVar bz = m.evaluate(t, z);
    auto tz = m.strict_ties(t, z);
    ++o.checked;
    for (std::size_t a = 0; a < atoms; ++a) {
      if (tx[a] || ty[a] || tz[a]) {
        ++o.ties;
        continue;
      }
      if (!ge_tol(bz[a], std::min(bx[a], by[a])))
        o.fail("value of a convex combination below the minimum",
               {{"x", xj(x)}, {"y", xj(y)}, {"c", c}, {"atom", id(a)}});
    }
  }

  // 2. bounds
  {
    auto& o = r[kBounds];
    ++o.checked;
    for (std::size_t a = 0; a < atoms; ++a)
      if (!ge_tol(bx[a], zd) || !ge_tol(zu, bx[a]))
        o.fail("value outside [z_d, z_u]", {{"x", xj(x)}, {"atom", id(a)}, {"value", num_json(bx[a])}});
    if (first) {
      TVar top = m.evaluate(t, XVar::constant(sp, kInf));
      for (std::size_t a = 0; a < atoms; ++a)
        if (!ext::near_scaled(top[a], zu, 1e-9))
          o.fail("value at +inf differs from z_u", {{"atom", id(a)}, {"value", num_json(top[a])}});
      std::vector<double> prev(atoms, kInf);
      TVar low = top;
      for (int k = 1; k <= 60; ++k) {
        low = m.evaluate(t, XVar::constant(sp, -std::ldexp(1.0, k)));
        for (std::size_t a = 0; a < atoms; ++a) {
          if (!ge_tol(prev[a], low[a]))
            o.fail("values at -2^k increase with k", {{"k", k}, {"atom", id(a)}});
          prev[a] = low[a];
        }
      }
      for (std::size_t a = 0; a < atoms; ++a) {
        bool ok = zd == -kInf ? low[a] <= -1e6 : ext::near_scaled(low[a], zd, 1e-9);
        if (!ok)
          o.fail("values at large losses do not approach z_d",
                 {{"atom", id(a)}, {"value", num_json(low[a])}});
      }
    }
  }

  // 3a. monotonicity
  {
    auto& o = r[kMono];
    std::vector<double> d(sp->leaf_count());
    for (double& v : d) v = rng.coin(0.3) ? 0.0 : (rng.coin(0.05) ? kInf : rng.uniform(0.0, 3.0));
    XVar big = x + XVar(sp, d);
    TVar bb = m.evaluate(t, big);
    ++o.checked;
    for (std::size_t a = 0; a < atoms; ++a)
      if (!ge_tol(bb[a], bx[a]))
        o.fail("value decreased on a larger position",
               {{"x", xj(x)}, {"larger", xj(big)}, {"atom", id(a)}});
  }

  // 3b. strict increase under positive constant shifts
  {
    auto& o = r[kStrict];
    double c = rng.uniform(0.01, 2.0);
    XVar xc = x + c;
    TVar bc = m.evaluate(t, xc);
    auto tc = m.strict_ties(t, xc);
    ++o.checked;
    for (std::size_t a = 0; a < atoms; ++a) {
      if (!(bx[a] < zu && bc[a] > zd)) continue;
      if (tx[a] || tc[a]) {
        ++o.ties;
        continue;
      }
      if (!(bc[a] > bx[a]))
        o.fail("no strict increase under a positive shift",
               {{"x", xj(x)}, {"c", c}, {"atom", id(a)}});
    }
  }

  // 4. continuity from below
  {
    auto& o = r[kCont];
    ++o.checked;
    std::vector<bool> skip = tx;
    nlohmann::json w{{"x", xj(x)}};
    std::vector<TVar> seq;
    for (double n = 1e2; n <= 1e8; n *= 10.0) seq.push_back(m.evaluate(t, x - 1.0 / n));
    w["sequence"] = "X - 1/n";
    check_sequence(o, seq, bx, skip, 5.0, w);

    if (!x.is_finite()) {
      seq.clear();
      for (double n = 1e2; n <= 1e16; n *= 10.0) seq.push_back(m.evaluate(t, truncate_above(x, n)));
      w["sequence"] = "min(X, n)";
      check_sequence(o, seq, bx, skip, 5.0, w);
    }

    std::vector<double> delta(sp->leaf_count());
    for (double& v : delta) v = rng.coin(0.3) ? 0.0 : rng.uniform(0.0, 3.0);
    seq.clear();
    for (int k = 1; k <= 40; k += 3) {
      std::vector<double> v(x.values().begin(), x.values().end());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = ext::add(v[i], -std::ldexp(delta[i], -k));
      seq.push_back(m.evaluate(t, XVar(sp, v)));
    }
    w["sequence"] = "X - delta 2^-k";
    w["delta"] = delta;
    check_sequence(o, seq, bx, skip, 4.0, w);
  }

  // 5. locality
  {
    auto& o = r[kLocal];
    EventMask b = random_event(rng, sp, t);
    TVar bl = m.evaluate(t, restrict_to(x, b));
    TVar bp = m.evaluate(t, paste(x, y, b));
    ++o.checked;
    for (std::size_t a = 0; a < atoms; ++a) {
      bool in = b.contains_atom(a);
      if (in && !ext::near_scaled(bl[a], bx[a], 1e-9))
        o.fail("value on B changes when X is cut to B", {{"x", xj(x)}, {"atom", id(a)}});
      double expect = in ? bx[a] : by[a];
      if (!ext::near_scaled(bp[a], expect, 1e-9))
        o.fail("pasted position not evaluated piecewise",
               {{"x", xj(x)}, {"y", xj(y)}, {"atom", id(a)}});
    }
  }

  // 6. level sets of F_t-measurable positions are bounded below
  {
    auto& o = r[kLevel];
    double z = levels[rng.index(0, levels.size() - 1)];
    std::vector<double> zero(sp->leaf_count(), 0.0);
    ++o.checked;
    TVar xi = random_tvar(rng, sp, t, -10.0, 10.0);
    TVar bxi = m.evaluate(t, xi.to_xvar());
    for (std::size_t a = 0; a < atoms; ++a) {
      double cstar = invert_atom(m, t, a, zero, z, 1e-10);
      if (!std::isfinite(cstar)) {
        o.fail("level set not bounded below", {{"z", z}, {"atom", id(a)}});
        continue;
      }
      if (bxi[a] >= z && !(xi[a] >= cstar - 1e-9))
        o.fail("acceptable constant below the level-set bound",
               {{"z", z}, {"atom", id(a)}, {"xi", xi[a]}, {"bound", cstar}});
    }
  }
  return r;
}

}  // namespace

Report check_axioms(const Measure& m, std::size_t t, std::size_t trials, std::uint64_t seed,
                    const Tolerances& tol) {
  tol.validate();
  if (trials == 0) throw DomainError("trials must be at least 1");
  m.space()->check_stage(t);
  std::vector<Trial> results(trials);
  std::vector<double> levels = interior_levels(m);
  parallel_for(trials, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    results[i] = run_trial(m, t, rng, i == 0, levels);
  });

  Report rep;
  rep.subject = m.name();
  rep.info = {{"t", t}, {"trials", trials}, {"seed", seed}};
  for (std::size_t c = 0; c < kChecks; ++c) {
    auto& out = rep.add(kAxiomNames[c]);
    for (std::size_t i = 0; i < trials; ++i) {
      const Outcome& o = results[i][c];
      out.checked += o.checked;
      out.ties += o.ties;
      if (o.failure && out.passed) {
        out.fail(o.failure->first, o.failure->second);
        out.witness["trial"] = i;
      }
    }
  }
  return rep;
}

Report check_scale_invariance(const Measure& m, std::size_t t, std::size_t trials,
                              std::uint64_t seed) {
  if (trials == 0) throw DomainError("trials must be at least 1");
  Report rep;
  rep.subject = m.name();
  rep.info = {{"t", t}, {"trials", trials}, {"seed", seed}};
  auto& homog = rep.add("zero_homogeneous");
  auto& structure = rep.add("constant_structure");
  const auto& sp = m.space();
  Rng rng(seed);
  TVar at_one = m.evaluate(t, XVar::constant(sp, 1.0));
  TVar at_zero = m.evaluate(t, XVar::constant(sp, 0.0));
  for (std::size_t i = 0; i < trials; ++i) {
    XVar x = random_xvar(rng, sp);
    double c = i == 0 ? 7.3 : rng.uniform(0.1, 10.0);
    XVar cx = c * x;
    TVar bx = m.evaluate(t, x), bc = m.evaluate(t, cx);
    auto tx = m.strict_ties(t, x), tc = m.strict_ties(t, cx);
    ++homog.checked;
    for (std::size_t a = 0; a < bx.size(); ++a) {
      if (tx[a] || tc[a]) {
        ++homog.ties;
        continue;
      }
      if (!ext::near_scaled(bc[a], bx[a], 1e-9))
        homog.fail("value changes under scaling",
                   {{"x", xj(x)}, {"c", c}, {"atom", FilteredSpace::atom_id(t, a)},
                    {"value", num_json(bx[a])}, {"scaled_value", num_json(bc[a])}});
    }

    std::vector<double> xi(sp->atom_count(t));
    for (double& v : xi) {
      double u = rng.uniform();
      v = u < 0.15 ? 0.0 : (u < 0.3 ? -5.0 : rng.uniform(-5.0, 5.0));
    }
    TVar xv(sp, t, xi);
    TVar bxi = m.evaluate(t, xv.to_xvar());
    ++structure.checked;
    for (std::size_t a = 0; a < xi.size(); ++a) {
      double expect = xi[a] > 0.0 ? at_one[a] : at_zero[a];
      if (!ext::near_scaled(bxi[a], expect, 1e-9))
        structure.fail("value on a constant differs from the value at 1 or 0",
                       {{"xi", xi}, {"atom", FilteredSpace::atom_id(t, a)}});
    }
  }
  return rep;
}

}  // namespace perflat
