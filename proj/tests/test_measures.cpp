#include <doctest.h>

#include <cmath>

#include "perflat/measures.hpp"
#include "perflat/random.hpp"

using namespace perflat;

TEST_CASE("GLR closed values") {
  auto sp = make_coin_space();
  auto glr = make_measure(MeasureSpec::glr(), sp);
  CHECK(glr->lower_bound() == 0.0);
  CHECK(glr->upper_bound() == kInf);
  CHECK(glr->evaluate(0, XVar(sp, {3.0, -1.0}))[0] == 2.0);
  CHECK(glr->evaluate(0, XVar::constant(sp, 0.0))[0] == 0.0);
  CHECK(glr->evaluate(0, XVar::constant(sp, 0.1))[0] == kInf);
  CHECK(glr->evaluate(0, XVar::constant(sp, -3.0))[0] == 0.0);
  // X = (1, 0) minus 1/n: (0.5 - 1/n) / (0.5 / n) = n - 2
  for (double n : {10.0, 100.0, 1000.0})
    CHECK(glr->evaluate(0, XVar(sp, {1.0 - 1.0 / n, -1.0 / n}))[0] == doctest::Approx(n - 2.0));
  CHECK(glr->evaluate(0, XVar(sp, {1.0, 0.0}))[0] == kInf);
  CHECK(glr->scale_invariant_candidate());
}

TEST_CASE("GLR on a two-step tree is evaluated per atom") {
  auto sp = make_binomial_tree(2);
  auto glr = make_measure(MeasureSpec::glr(), sp);
  XVar x(sp, {2.0, -1.0, -1.0, -1.0});
  TVar b1 = glr->evaluate(1, x);
  CHECK(b1[0] == doctest::Approx(1.0));  // E = 0.5, E^- = 0.5
  CHECK(b1[1] == 0.0);
  CHECK(glr->evaluate(0, x)[0] == 0.0);  // E = -0.25
}

TEST_CASE("exponential utility") {
  auto sp = make_coin_space();
  auto m = make_measure(MeasureSpec::exp_utility(1.0), sp);
  CHECK(m->upper_bound() == 1.0);
  CHECK(m->lower_bound() == -kInf);
  CHECK(m->evaluate(0, XVar::constant(sp, 0.0))[0] == 0.0);
  double expect = 1.0 - 0.5 * (std::exp(-1.0) + std::exp(1.0));
  CHECK(m->evaluate(0, XVar(sp, {1.0, -1.0}))[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(m->evaluate(0, XVar::constant(sp, kInf))[0] == 1.0);
  CHECK_FALSE(m->scale_invariant_candidate());

  auto lam = make_measure(MeasureSpec::exp_utility(RiskAversion::process({{2.0}, {2.0, 0.5}})), sp);
  TVar b = lam->evaluate(1, XVar(sp, {1.0, 1.0}));
  CHECK(b[0] == doctest::Approx(1.0 - std::exp(-2.0)));
  CHECK(b[1] == doctest::Approx(1.0 - std::exp(-0.5)));
  CHECK_THROWS_AS(make_measure(MeasureSpec::exp_utility(RiskAversion::process({{1.0}})), sp),
                  ValidationError);
  CHECK_THROWS_AS(make_measure(MeasureSpec::exp_utility(-1.0), sp), ValidationError);
}

TEST_CASE("certainty equivalent") {
  auto sp = make_coin_space();
  auto m = make_measure(MeasureSpec::certainty_equivalent(Utility::exponential(1.0)), sp);
  for (double c : {-4.0, 0.0, 2.5}) CHECK(m->evaluate(0, XVar::constant(sp, c))[0] == doctest::Approx(c));
  CHECK(m->evaluate(0, XVar(sp, {1.0, -1.0}))[0] ==
        doctest::Approx(-std::log(std::cosh(1.0))).epsilon(1e-14));
  // huge losses must not overflow in log-sum-exp form
  CHECK(m->evaluate(0, XVar(sp, {0.0, -2000.0}))[0] == doctest::Approx(-2000.0 + std::log(2.0)));
  CHECK(m->lower_bound() == -kInf);
  CHECK(m->upper_bound() == kInf);

  Utility flat = Utility::piecewise_linear({{0.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}});
  CHECK_THROWS_AS(make_measure(MeasureSpec::certainty_equivalent(flat), sp), ValidationError);
}

TEST_CASE("expected utility with endowment") {
  auto sp = make_coin_space();
  MeasureSpec s = MeasureSpec::expected_utility(Utility::linear());
  s.endowment = {1.0, 3.0};
  auto m = make_measure(s, sp);
  CHECK(m->evaluate(0, XVar(sp, {0.0, 0.0}))[0] == doctest::Approx(2.0));
  CHECK(m->evaluate(1, XVar(sp, {1.0, -1.0}))[1] == doctest::Approx(2.0));
}

TEST_CASE("conditional expectation under Q") {
  auto sp = make_coin_space();
  auto m = make_measure(MeasureSpec::cond_expectation({0.25, 0.75}), sp);
  CHECK(m->evaluate(0, XVar(sp, {4.0, 0.0}))[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_measure(MeasureSpec::cond_expectation({1.0, 0.0}), sp), ValidationError);
}

TEST_CASE("reward to risk ratios") {
  auto sp = make_coin_space();
  auto lpm = make_measure(MeasureSpec::lpm_ratio(2.0), sp);
  // E = 1, sigma = sqrt(E[(X^-)^2]) = sqrt(0.5)
  CHECK(lpm->evaluate(0, XVar(sp, {3.0, -1.0}))[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(lpm->evaluate(0, XVar(sp, {3.0, 1.0}))[0] == kInf);
  CHECK(lpm->evaluate(0, XVar(sp, {-3.0, 1.0}))[0] == 0.0);
  CHECK(lpm->scale_invariant_candidate());

  auto avar = make_measure(MeasureSpec::avar_ratio(0.5), sp);
  CHECK(avar->evaluate(0, XVar(sp, {3.0, -1.0}))[0] == doctest::Approx(1.0));

  SUBCASE("value at zero under both conventions") {
    CHECK(lpm->evaluate(0, XVar::constant(sp, 0.0))[0] == 0.0);
    MeasureSpec alt = MeasureSpec::lpm_ratio(2.0);
    alt.denominator.infinite_on_nonpositive_risk = true;
    auto m = make_measure(alt, sp);
    CHECK(m->evaluate(0, XVar::constant(sp, 0.0))[0] == kInf);
  }
}

TEST_CASE("AVaR on an atom by the sorted tail") {
  std::vector<double> x{-2.0, 1.0, 5.0, 0.0};
  std::vector<double> p{0.1, 0.4, 0.3, 0.2};
  // worst 20%: -2 w.p. 0.1, then 0 w.p. 0.1
  CHECK(avar_on_atom(x, p, 0.2) == doctest::Approx(1.0));
  CHECK(avar_on_atom(x, p, 0.1) == doctest::Approx(2.0));
  // full level is minus the mean
  CHECK(avar_on_atom(x, p, 1.0) == doctest::Approx(-(-0.2 + 0.4 + 1.5)));
}

TEST_CASE("declared bounds must match") {
  auto sp = make_coin_space();
  MeasureSpec s = MeasureSpec::glr();
  s.z_d = 0.0;
  s.z_u = kInf;
  CHECK_NOTHROW(make_measure(s, sp));
  s.z_u = 5.0;
  try {
    make_measure(s, sp);
    FAIL("declared bounds accepted");
  } catch (const ValidationError& e) {
    CHECK(e.invariant() == "declared_bounds");
  }
}

TEST_CASE("utilities") {
  Utility pw = Utility::power(0.5);
  CHECK(pw.value(3.0) == doctest::Approx(2.0));
  CHECK(pw.value(-1.5) == doctest::Approx(-1.5));
  CHECK(pw.inverse(2.0) == doctest::Approx(3.0));
  CHECK(pw.sup_value() == kInf);
  Utility neg = Utility::power(-1.0);
  CHECK(neg.sup_value() == doctest::Approx(1.0));
  CHECK(neg.inverse(1.0) == kInf);

  Utility ex = Utility::exponential(2.0);
  CHECK(ex.value(kInf) == 1.0);
  CHECK(ex.inverse(ex.value(0.7)) == doctest::Approx(0.7));

  Utility kinked = Utility::piecewise_linear({{0.0, 0.0}, {1.0, 2.0}, {3.0, 3.0}});
  CHECK(kinked.value(-1.0) == doctest::Approx(-2.0));
  CHECK(kinked.value(2.0) == doctest::Approx(2.5));
  CHECK(kinked.inverse(2.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(Utility::piecewise_linear({{0.0, 0.0}, {1.0, 1.0}, {2.0, 3.0}}), ValidationError);
  CHECK_THROWS_AS(Utility::power(1.0), ValidationError);
}

TEST_CASE("locality holds by construction on random trees") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    auto sp = random_tree(rng);
    auto m = make_measure(MeasureSpec::lpm_ratio(2.0), sp);
    XVar x = random_xvar(rng, sp), y = random_xvar(rng, sp);
    EventMask b = random_event(rng, sp, 1);
    TVar bx = m->evaluate(1, x), by = m->evaluate(1, y), bp = m->evaluate(1, paste(x, y, b));
    for (std::size_t a = 0; a < bp.size(); ++a) CHECK(bp[a] == (b.contains_atom(a) ? bx[a] : by[a]));
  }
}
