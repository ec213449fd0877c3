#include <doctest.h>

#include <cmath>

#include "perflat/random.hpp"
#include "perflat/risk_family.hpp"

using namespace perflat;

TEST_CASE("cash inversion edge cases") {
  // accepted from 0 on: zero snap
  CHECK(invert_monotone([](double c) { return c >= 0.0; }, 1e-10) == 0.0);
  CHECK(invert_monotone([](double c) { return c >= 1e-12; }, 1e-10) == 0.0);
  CHECK(invert_monotone([](double c) { return c >= 2.75; }, 1e-10) == doctest::Approx(2.75).epsilon(1e-10));
  CHECK(invert_monotone([](double c) { return c >= -1e5; }, 1e-10) == doctest::Approx(-1e5));
  CHECK(invert_monotone([](double) { return true; }, 1e-10) == -kInf);
  CHECK_THROWS_AS(invert_monotone([](double) { return false; }, 1e-10), InconsistencyError);
}

TEST_CASE("GLR induced risk by hand") {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  XVar x(sp, {3.0, -1.0});
  // E[X + c] >= z E[(X + c)^-]  <=>  1 + c >= z (1 - c) / 2
  CHECK(induce_risk(*glr, 0, 2.0, x)[0] == 0.0);
  CHECK(induce_risk(*glr, 0, 1.0, x)[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
  CHECK(induce_risk(*glr, 0, 3.0, x)[0] == doctest::Approx(0.2).epsilon(1e-9));
  XVar zero = XVar::constant(sp, 0.0);
  CHECK(induce_risk(*glr, 0, 1.0, zero)[0] == 0.0);
  CHECK(induce_risk(*glr, 0, 2.0, zero)[0] == 0.0);
  CHECK_THROWS_AS(induce_risk(*glr, 0, 0.0, x), DomainError);
  CHECK_THROWS_AS(induce_risk(*glr, 0, kInf, x), DomainError);
}

TEST_CASE("entropic closed form") {
  auto sp = make_coin_space();
  TVar one = TVar::constant(sp, 0, 1.0);
  XVar zero = XVar::constant(sp, 0.0);
  CHECK(entropic_closed_form(one, 0.0, zero)[0] == 0.0);
  CHECK(entropic_closed_form(one, 1.0 - std::exp(-1.0), zero)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(entropic_closed_form(one, 0.0, XVar(sp, {1.0, -1.0}))[0] ==
        doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-15));
  // +inf leaf: e^{-inf} = 0
  CHECK(entropic_closed_form(one, 0.0, XVar(sp, {kInf, -1.0}))[0] ==
        doctest::Approx(1.0 - std::log(2.0)));
  TVar two = TVar::constant(sp, 0, 2.0);
  CHECK(entropic_closed_form_log_level(two, 2e6, zero)[0] == doctest::Approx(-1e6));

  auto m = make_measure(MeasureSpec::exp_utility(1.0), sp);
  for (double z : {-3.0, 0.0, 0.5, 0.9})
    CHECK(induce_risk(*m, 0, z, zero)[0] == doctest::Approx(-std::log(1.0 - z)).epsilon(1e-9));
}

TEST_CASE("induced exponential risk matches the closed form on random trees") {
  Rng rng(17);
  for (int i = 0; i < 60; ++i) {
    auto sp = random_tree(rng);
    std::vector<std::vector<double>> lam(sp->stage_count());
    for (std::size_t t = 0; t < lam.size(); ++t)
      for (std::size_t a = 0; a < sp->atom_count(t); ++a) lam[t].push_back(rng.uniform(0.5, 2.0));
    RiskAversion ra = RiskAversion::process(lam);
    auto m = make_measure(MeasureSpec::exp_utility(ra), sp);
    XVar x = random_xvar(rng, sp);
    double z = rng.uniform(-5.0, 0.95);
    std::size_t t = rng.index(0, sp->horizon());
    TVar a = induce_risk(*m, t, z, x), b = entropic_closed_form(lambda_at(ra, sp, t), z, x);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-8));
  }
}

TEST_CASE("risk curves") {
  auto sp = make_coin_space();
  auto ex = make_measure(MeasureSpec::exp_utility(1.0), sp);
  std::vector<double> grid{0.0, 0.5, 1.0 - std::exp(-1.0)};
  RiskCurve c = risk_curve(*ex, 0, XVar::constant(sp, 0.0), grid, {}, false);
  CHECK(c.values[0][0] == doctest::Approx(0.0));
  CHECK(c.values[1][0] == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(c.values[2][0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.monotone);

  auto glr = make_measure(MeasureSpec::glr(), sp);
  std::vector<double> g2{1.0, 2.0, 3.0};
  RiskCurve d = risk_curve(*glr, 0, XVar(sp, {3.0, -1.0}), g2);
  CHECK(d.monotone);
  CHECK(d.values[1][0] == 0.0);
  CHECK(d.values[0][0] < d.values[1][0]);
  CHECK(d.values[1][0] < d.values[2][0]);
  CHECK_FALSE(d.limit.has_value());

  std::vector<double> bad{2.0, 1.0};
  CHECK_THROWS_AS(risk_curve(*glr, 0, XVar(sp, {3.0, -1.0}), bad), DomainError);
}

TEST_CASE("the exponential lower limit is out of reach of the probe but not of the log form") {
  auto sp = make_coin_space();
  auto ex = make_measure(MeasureSpec::exp_utility(1.0), sp);
  XVar zero = XVar::constant(sp, 0.0);
  LimitProbe p = probe_lower_limit([&](double z) { return entropic_closed_form(TVar::constant(sp, 0, 1.0), z, zero); });
  CHECK_FALSE(p.reached);
  for (std::size_t i = 1; i < p.trail.size(); ++i) CHECK(p.trail[i].second <= p.trail[i - 1].second);
  CHECK(entropic_closed_form_log_level(TVar::constant(sp, 0, 1.0), 1e6 + 1.0, zero)[0] < -1e6);

  auto lin = make_measure(MeasureSpec::expected_utility(Utility::linear()), sp);
  LimitProbe q = probe_lower_limit([&](double z) { return induce_risk(*lin, 0, z, zero); });
  CHECK(q.reached);
}

TEST_CASE("reconstruction") {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  CHECK(reconstruct(induced_family(glr), 0, XVar(sp, {3.0, -1.0}))[0] == doctest::Approx(2.0).epsilon(1e-7));
  // sigma >= 0 at every level: z_d
  CHECK(reconstruct(induced_family(glr), 0, XVar(sp, {-3.0, -1.0}))[0] == 0.0);
  CHECK(reconstruct(induced_family(glr), 0, XVar::constant(sp, 1.0))[0] == kInf);

  StandardFamily ent = entropic_family(sp, RiskAversion::fixed(1.0));
  for (double c : {-2.0, 0.0, 0.5, 3.0})
    CHECK(reconstruct(ent, 0, XVar::constant(sp, c))[0] == doctest::Approx(1.0 - std::exp(-c)).epsilon(1e-7));
}

TEST_CASE("round trip on random trees") {
  Rng rng(5);
  Tolerances tol;
  tol.tol_c = 1e-13;
  for (int i = 0; i < 20; ++i) {
    auto sp = random_tree(rng);
    for (const auto& spec : {MeasureSpec::glr(), MeasureSpec::lpm_ratio(2.0),
                             MeasureSpec::certainty_equivalent(Utility::exponential(1.0))}) {
      auto m = make_measure(spec, sp);
      XVar x = random_xvar(rng, sp);
      std::size_t t = rng.index(0, sp->horizon());
      TVar direct = m->evaluate(t, x), back = reconstruct(induced_family(m, tol), t, x, tol);
      for (std::size_t a = 0; a < direct.size(); ++a) {
        if (std::isinf(direct[a]))
          CHECK(back[a] == direct[a]);
        else
          CHECK(std::fabs(back[a] - direct[a]) <= 1e-6);
      }
    }
  }
}

TEST_CASE("standard family validation") {
  auto sp = make_binomial_tree(2);
  std::vector<double> g{-2.0, -0.5, 0.0, 0.3, 0.6, 0.9};
  Report ent = validate_standard_family(entropic_family(sp, RiskAversion::fixed(1.0)), 60, g, 4);
  CHECK(ent.passed());
  CHECK(ent.info["coherent"] == false);

  std::vector<double> gg{0.25, 0.5, 1.0, 2.0, 4.0};
  Report glr = validate_standard_family(induced_family(make_measure(MeasureSpec::glr(), sp)), 60, gg, 4);
  CHECK(glr.passed());
  CHECK(glr.info["coherent"] == true);

  StandardFamily down;
  down.space = sp;
  down.name = "decreasing";
  down.provenance = "user-supplied";
  down.evaluate_levels = [sp](std::span<const double> levels, std::size_t t, const XVar& x) {
    TVar e = cond_expect(x, t);
    std::vector<double> v(e.size());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = -e[a] - levels[a];
    return TVar(sp, t, v);
  };
  Report bad = validate_standard_family(down, 30, g, 4);
  CHECK_FALSE(bad.find("b_nondecreasing_in_z")->passed);
}

TEST_CASE("GLR dual") {
  auto sp = make_coin_space();
  XVar x11(sp, {1.0, -1.0});
  DualSolution d = glr_dual_solve(0, 1.0, x11);
  CHECK(d.rho[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(d.q[0] == doctest::Approx(1.0 / 3.0));
  CHECK(d.q[1] == doctest::Approx(2.0 / 3.0));
  CHECK(glr_dual_feasible(*sp, 0, 1.0, d.q)[0]);
  std::vector<double> off{0.1, 0.9};
  CHECK_FALSE(glr_dual_feasible(*sp, 0, 1.0, off)[0]);

  CHECK(glr_dual_risk(0, 2.0, XVar(sp, {3.0, -1.0}))[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(glr_dual_risk(0, 5.0, XVar::constant(sp, 2.5))[0] == doctest::Approx(-2.5));
  CHECK_THROWS_AS(glr_dual_solve(0, 0.0, x11), DomainError);
  CHECK_THROWS_AS(glr_dual_solve(0, 1.0, XVar(sp, {kInf, 0.0})), DomainError);
}

TEST_CASE("dual agrees with bisection on random atoms") {
  Rng rng(23);
  for (int i = 0; i < 40; ++i) {
    std::size_t n = rng.index(2, 8);
    std::vector<double> p(n);
    double s = 0.0;
    for (double& v : p) s += (v = rng.uniform(0.2, 1.0));
    for (double& v : p) v /= s;
    auto sp = make_one_period_space(p);
    auto glr = make_measure(MeasureSpec::glr(), sp);
    XVar x = random_xvar(rng, sp);
    for (double z : {0.5, 1.0, 2.0, 5.0})
      CHECK(glr_dual_risk(0, z, x)[0] == doctest::Approx(induce_risk(*glr, 0, z, x)[0]).epsilon(1e-8));
  }
}

TEST_CASE("truncation and closure") {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  std::vector<double> ns{1.0, 10.0, 100.0, 1e4, 1e8};
  // with a +inf leaf the GLR risk is -inf and the truncations run down to it
  Report tr = truncation_limit_check(*glr, 0, 1.0, XVar(sp, {kInf, -1.0}), ns);
  CHECK(tr.passed());
  Report fin = truncation_limit_check(*glr, 0, 1.0, XVar(sp, {2.0, -1.0}), ns);
  CHECK(fin.passed());

  Report cl = closure_check(*glr, 0, 1.0, 50, 8);
  CHECK(cl.passed());
}

TEST_CASE("penalty lower bound vanishes on feasible densities") {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  Rng rng(1);
  std::vector<XVar> probes;
  for (int i = 0; i < 20; ++i) probes.push_back(random_xvar(rng, sp));
  std::vector<double> p{0.5, 0.5};
  CHECK(penalty_lower_bound(*glr, 0, 1.0, p, probes)[0] <= 1e-9);
  std::vector<double> outside{0.05, 0.95};
  CHECK(penalty_lower_bound(*glr, 0, 1.0, outside, probes)[0] > 0.0);
}
