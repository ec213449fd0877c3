// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "perflat/axioms.hpp"
#include "perflat/dividends.hpp"
#include "perflat/dynamics.hpp"
#include "perflat/io.hpp"
#include "perflat/random.hpp"
#include "perflat/risk_family.hpp"

using namespace perflat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

RiskAversion random_lambda(Rng& rng, const FilteredSpace& sp) {
  std::vector<std::vector<double>> v(sp.stage_count());
  for (std::size_t t = 0; t < v.size(); ++t)
    for (std::size_t a = 0; a < sp.atom_count(t); ++a) v[t].push_back(rng.uniform(0.5, 2.0));
  return RiskAversion::process(std::move(v));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

std::vector<MeasureSpec> shipped() {
  return {MeasureSpec::glr(),
          MeasureSpec::lpm_ratio(2.0),
          MeasureSpec::avar_ratio(0.2),
          MeasureSpec::exp_utility(1.0),
          MeasureSpec::certainty_equivalent(Utility::exponential(1.0)),
          MeasureSpec::expected_utility(Utility::power(0.5)),
          MeasureSpec::cond_expectation()};
}

// 1. reconstruct(induce(m)) = m
Outcome round_trip() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  Tolerances tol;
  tol.tol_c = 1e-15;
  double worst = 0.0;
  std::size_t atoms = 0;
  Outcome o;
  for (int i = 0; i < 200; ++i) {
    auto sp = random_tree(rng);
    std::vector<MeasureSpec> specs{MeasureSpec::glr(), MeasureSpec::exp_utility(1.0),
                                   MeasureSpec::exp_utility(random_lambda(rng, *sp)),
                                   MeasureSpec::certainty_equivalent(Utility::exponential(1.0)),
                                   MeasureSpec::lpm_ratio(2.0)};
    for (const auto& spec : specs) {
      auto m = make_measure(spec, sp);
      XVar x = random_xvar(rng, sp);
      StandardFamily f = induced_family(m, tol);
      for (std::size_t t = 0; t < sp->horizon(); ++t) {
        TVar direct = m->evaluate(t, x), back = reconstruct(f, t, x, tol);
        for (std::size_t a = 0; a < direct.size(); ++a, ++atoms) {
          double err = std::isinf(direct[a]) ? (back[a] == direct[a] ? 0.0 : kInf)
                                             : std::fabs(back[a] - direct[a]);
          worst = std::max(worst, err);
          if (err > 1e-6 && o.pass) {
            o.pass = false;
            o.detail = m->name() + " off by " + fmt(err) + "; ";
          }
        }
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > 60.0) o.pass = false;
  o.detail += std::to_string(atoms) + " atoms, max error " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

// 2. induced exponential-utility risk vs the entropic closed form
Outcome entropic() {
  Rng rng(202);
  Outcome o;
  double worst = 0.0, worst_zero = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto sp = random_tree(rng);
    RiskAversion ra = random_lambda(rng, *sp);
    auto m = make_measure(MeasureSpec::exp_utility(ra), sp);
    std::size_t t = rng.index(0, sp->horizon());
    double z = i % 5 == 0 ? rng.uniform(-50.0, 0.0) : rng.uniform(-2.0, 0.99);
    XVar x = random_xvar(rng, sp);
    TVar lam = lambda_at(ra, sp, t);
    TVar a = induce_risk(*m, t, z, x), b = entropic_closed_form(lam, z, x);
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::fabs(a[k] - b[k]));
    XVar zero = XVar::constant(sp, 0.0);
    TVar c = entropic_closed_form(lam, z, zero), d = induce_risk(*m, t, z, zero);
    for (std::size_t k = 0; k < c.size(); ++k) {
      double printed = -std::log(1.0 - z) / lam[k];
      worst_zero = std::max(worst_zero, std::fabs(c[k] - printed));
      worst = std::max(worst, std::fabs(d[k] - printed));
    }
  }
  o.pass = worst <= 1e-8 && worst_zero <= 1e-15;
  o.detail = "max |induce - closed form| " + fmt(worst) + ", max |closed form(0) + ln(1-z)/lambda| " +
             fmt(worst_zero);
  return o;
}

// 3. beta_t > z iff rho_t^z < 0, and beta_t <= z iff rho_t^z >= 0
Outcome sign_equivalence() {
  Rng rng(303);
  Tolerances tol;
  tol.tol_c = 1e-15;
  std::size_t checked = 0, skipped = 0, bad = 0;
  auto specs = shipped();
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    auto sp = random_tree(rng);
    auto m = make_measure(specs[static_cast<std::size_t>(i) % specs.size()], sp);
    std::size_t t = rng.index(0, sp->horizon() - 1);
    XVar x = random_xvar(rng, sp);
    double lo = std::isinf(m->lower_bound()) ? -3.0 : m->lower_bound();
    double hi = std::isinf(m->upper_bound()) ? 5.0 : m->upper_bound();
    double z = rng.uniform(lo, hi);
    if (!(z > m->lower_bound() && z < m->upper_bound())) z = 0.5 * (lo + hi);
    TVar b = m->evaluate(t, x), r = induce_risk(*m, t, z, x, tol);
    for (std::size_t a = 0; a < b.size(); ++a) {
      if (std::fabs(b[a] - z) < 1e-6) {
        ++skipped;
        continue;
      }
      ++checked;
      if ((b[a] > z) != (r[a] < 0.0) || (b[a] <= z) != (r[a] >= 0.0)) {
        ++bad;
        if (first.empty()) first = "; first: " + m->name() + " z=" + fmt(z) + " beta=" + fmt(b[a]) + " rho=" + fmt(r[a]);
      }
    }
  }
  return {bad == 0, std::to_string(checked) + " atoms checked, " + std::to_string(skipped) +
                        " within 1e-6 of z skipped, " + std::to_string(bad) + " violations" + first};
}

// 4. GLR dual LP vs bisection
Outcome glr_duality() {
  Rng rng(404);
  double worst = 0.0;
  std::size_t n_inst = 0;
  const double levels[] = {0.5, 1.0, 2.0, 5.0};
  for (int i = 0; i < 300; ++i) {
    std::size_t n = rng.index(2, 8);
    std::vector<double> p(n);
    double s = 0.0;
    for (double& v : p) s += (v = rng.uniform(0.2, 1.0));
    for (double& v : p) v /= s;
    auto sp = make_one_period_space(p);
    auto glr = make_measure(MeasureSpec::glr(), sp);
    XVar x = random_xvar(rng, sp);
    double z = levels[i % 4];
    worst = std::max(worst, std::fabs(glr_dual_risk(0, z, x)[0] - induce_risk(*glr, 0, z, x)[0]));
    ++n_inst;
  }
  auto coin = make_coin_space();
  double third = glr_dual_risk(0, 1.0, XVar(coin, {1.0, -1.0}))[0];
  bool ok = worst <= 1e-6 && std::fabs(third - 1.0 / 3.0) <= 1e-9;
  return {ok, std::to_string(n_inst) + " instances, max gap " + fmt(worst) + "; X=(1,-1), z=1 gives " +
                  io::dump(third, -1)};
}

// 5. dynamic GLR time consistency
Outcome glr_consistency() {
  Rng rng(505);
  std::vector<double> grid{0.1, 0.5, 1.0, 2.0, 5.0};
  std::size_t samples = 0, ties = 0, checked = 0, violations = 0;
  bool agree = true;
  for (int i = 0; i < 20; ++i) {
    TreeShape shape;
    shape.min_stages = shape.max_stages = 2 + static_cast<std::size_t>(i % 2);
    DynamicMeasure d(make_measure(MeasureSpec::glr(), random_tree(rng, shape)));
    ConsistencyReport r = check_time_consistency(d, grid, 20, derive_seed(505, i));
    samples += r.report.info["samples"].get<std::size_t>();
    const CheckResult* c = r.report.find("measure_level");
    checked += c->checked;
    ties += c->ties;
    violations += r.counterexample;
    agree = agree && r.report.find("criteria_agree")->passed && r.report.passed();
  }
  bool ok = samples >= 1000 && violations == 0 && agree;
  return {ok, std::to_string(samples) + " (X, s, t, z) samples, " + std::to_string(checked) +
                  " atom checks, " + std::to_string(ties) + " ties skipped, " +
                  std::to_string(violations) + " violations, criteria agree: " + (agree ? "yes" : "no")};
}

// 6. LPM ratio counterexample on the two-step binomial tree
Outcome lpm_counterexample() {
  auto sp = make_binomial_tree(2);
  DynamicMeasure d(make_measure(MeasureSpec::lpm_ratio(2.0), sp));
  ConsistencyReport r = search_counterexample(d, 100000, 7);
  if (!r.witness) return {false, "no witness within budget"};
  const Witness& w = *r.witness;
  bool verified = verify_witness(d, w, 1e-12);
  auto pinned = io::read_json_file(std::string(PERFLAT_SOURCE_DIR) + "/fixtures/lpm_binomial_witness.json");
  XVar px = io::parse_xvar(pinned, sp);
  bool same = true;
  for (std::size_t i = 0; i < px.size(); ++i) same = same && std::fabs(px[i] - w.x[i]) <= 1e-12;
  const auto& pw = pinned["witness"];
  same = same && pw["s"].get<std::size_t>() == w.s && pw["t"].get<std::size_t>() == w.t &&
         sp->resolve_atom(w.s, pw["atom_s"].get<std::string>()) == w.atom_s &&
         std::fabs(pw["z"].get<double>() - w.z) <= 1e-12 * std::max(1.0, std::fabs(w.z));
  bool ok = verified && w.margin >= 1e-3 && same;
  return {ok, "margin " + fmt(w.margin) + ", re-verified at 1e-12: " + (verified ? "yes" : "no") +
                  ", matches pinned fixture: " + (same ? "yes" : "no")};
}

// 7. value at 0
Outcome value_at_zero() {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  XVar zero = XVar::constant(sp, 0.0);
  double at0 = glr->evaluate(0, zero)[0];
  double tenth = glr->evaluate(0, XVar::constant(sp, 1.0 / 10.0))[0];
  double r1 = induce_risk(*glr, 0, 1.0, zero)[0], r2 = induce_risk(*glr, 0, 2.0, zero)[0];
  bool ok = at0 == 0.0 && tenth == kInf && r1 == 0.0 && r2 == 0.0;
  return {ok, "GLR(0)=" + fmt(at0) + " GLR(1/10)=" + fmt(tenth) + " rho^1(0)=" + fmt(r1) +
                  " rho^2(0)=" + fmt(r2)};
}

// 8. axioms for every shipped measure; scale invariance for GLR and LPM only
Outcome axiom_suite() {
  Rng rng(808);
  TreeShape shape;
  shape.min_stages = shape.max_stages = 2;
  auto sp = random_tree(rng, shape);
  Outcome o;
  std::string failed;
  for (const auto& spec : shipped()) {
    auto m = make_measure(spec, sp);
    for (std::size_t t : {std::size_t{0}, std::size_t{1}}) {
      Report r = check_axioms(*m, t, 500, 88);
      for (const auto& c : r.checks)
        if (!c.passed) failed += m->name() + "/" + c.name + " ";
    }
  }
  auto scale = [&](const MeasureSpec& s) { return check_scale_invariance(*make_measure(s, sp), 1, 200, 8); };
  Report g = scale(MeasureSpec::glr()), l = scale(MeasureSpec::lpm_ratio(2.0)), e = scale(MeasureSpec::exp_utility(1.0));
  bool exp_witness = !e.passed() && !e.find("zero_homogeneous")->witness.is_null();
  o.pass = failed.empty() && g.passed() && l.passed() && exp_witness;
  o.detail = std::to_string(shipped().size()) + " measures x 2 stages x 500 trials" +
             (failed.empty() ? ", all axioms hold" : ", failures: " + failed) +
             "; scale invariance GLR " + (g.passed() ? "pass" : "FAIL") + ", LPM " +
             (l.passed() ? "pass" : "FAIL") + ", exp utility " + (exp_witness ? "fails with witness" : "no witness");
  return o;
}

// 9. monotone risk curves; exponential lower limit via the log-level form
Outcome risk_curves() {
  Rng rng(909);
  std::size_t curves = 0;
  std::string bad;
  for (int i = 0; i < 20; ++i) {
    auto sp = random_tree(rng);
    for (const auto& spec : shipped()) {
      auto m = make_measure(spec, sp);
      double lo = std::isinf(m->lower_bound()) ? -20.0 : m->lower_bound();
      double hi = std::isinf(m->upper_bound()) ? 20.0 : m->upper_bound();
      std::vector<double> grid(50);
      for (std::size_t k = 0; k < 50; ++k) grid[k] = lo + (hi - lo) * (static_cast<double>(k) + 1.0) / 51.0;
      RiskCurve c = risk_curve(*m, rng.index(0, sp->horizon()), random_xvar(rng, sp), grid, {}, false);
      ++curves;
      if (!c.monotone) bad += m->name() + " ";
    }
  }
  // esssup rho^z(0) = -w / lambda_max with w = ln(1 - z); double w until below -1e6
  auto sp = random_tree(rng);
  RiskAversion ra = random_lambda(rng, *sp);
  std::size_t t = 1;
  TVar lam = lambda_at(ra, sp, t);
  XVar zero = XVar::constant(sp, 0.0);
  double w = 1.0, sup = 0.0;
  bool agree = true;
  auto m = make_measure(MeasureSpec::exp_utility(ra), sp);
  for (; w < 1e300; w *= 2.0) {
    TVar r = entropic_closed_form_log_level(lam, w, zero);
    sup = -kInf;
    for (double v : r.values()) sup = std::max(sup, v);
    if (w <= 32.0) {
      // cross-check with bisection while z = 1 - e^w is still representable
      TVar b = induce_risk(*m, t, 1.0 - std::exp(w), zero);
      for (std::size_t a = 0; a < r.size(); ++a) agree = agree && std::fabs(b[a] - r[a]) <= 1e-8 * std::max(1.0, std::fabs(r[a]));
    }
    if (sup < -1e6) break;
  }
  bool ok = bad.empty() && sup < -1e6 && agree;
  return {ok, std::to_string(curves) + " curves of 50 levels" + (bad.empty() ? " all monotone" : ", non-monotone: " + bad) +
                  "; exp limit esssup rho = " + fmt(sup) + " at ln(1-z) = " + fmt(w) +
                  ", bisection agrees: " + (agree ? "yes" : "no")};
}

// 10. dividend lift
Outcome dividend_lift() {
  Rng rng(1010);
  TreeShape shape;
  shape.min_stages = shape.max_stages = 3;
  auto sp = random_tree(rng, shape);
  std::string failed;
  for (const auto& spec : shipped()) {
    auto m = make_measure(spec, sp);
    Report r = check_lift_axioms(*m, 300, 10);
    for (const auto& c : r.checks)
      if (!c.passed) failed += m->name() + "/" + c.name + " ";
  }
  DynamicMeasure lpm(make_measure(MeasureSpec::lpm_ratio(2.0), make_binomial_tree(2)));
  std::vector<double> grid{0.25, 0.5, 1.0, 2.0};
  Report t = check_lift_time_consistency(lpm, grid, 100, 10, 100000);
  bool transported = t.find("witness_transport")->passed && t.find("witness_transport")->checked == 1;
  bool ok = failed.empty() && transported && t.passed();
  return {ok, "lift properties on 300 processes per measure" +
                  (failed.empty() ? std::string(": all pass") : ": failures " + failed) +
                  "; LPM witness transported: " + (transported ? "yes" : "no")};
}

// 11. C_s(C_t(X)) = C_s(X)
Outcome ce_strong_consistency() {
  Rng rng(1111);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    auto sp = random_tree(rng);
    Utility u = i % 3 == 0 ? Utility::exponential(rng.uniform(0.2, 3.0))
                : i % 3 == 1 ? Utility::power(rng.uniform(-2.0, 0.9))
                             : Utility::piecewise_linear({{-1.0, -2.0}, {0.0, 0.0}, {2.0, 1.0}});
    auto ce = make_measure(MeasureSpec::certainty_equivalent(u), sp);
    XVar x = random_xvar(rng, sp);
    std::size_t t = rng.index(1, sp->horizon());
    std::size_t s = rng.index(0, t - 1);
    TVar direct = ce->evaluate(s, x), nested = ce->evaluate(s, ce->evaluate(t, x).to_xvar());
    for (std::size_t a = 0; a < direct.size(); ++a) worst = std::max(worst, std::fabs(nested[a] - direct[a]));
  }
  return {worst <= 1e-9, "300 instances, max |C_s(C_t(X)) - C_s(X)| " + fmt(worst)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"round-trip reconstruction", round_trip},
      {"entropic closed form", entropic},
      {"sign equivalences", sign_equivalence},
      {"GLR strong duality", glr_duality},
      {"dynamic GLR time consistency", glr_consistency},
      {"LPM ratio counterexample", lpm_counterexample},
      {"value at zero", value_at_zero},
      {"axiom suite", axiom_suite},
      {"risk-curve structure", risk_curves},
      {"dividend lift", dividend_lift},
      {"CE strong consistency", ce_strong_consistency},
  };
  int failures = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << name << "): " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
