#include <doctest.h>

#include <cmath>

#include "perflat/dynamics.hpp"
#include "perflat/io.hpp"
#include "perflat/random.hpp"
#include "perflat/risk_family.hpp"

using namespace perflat;

TEST_CASE("GLR is time consistent on sampled 3-stage trees") {
  Rng rng(31);
  TreeShape shape;
  shape.min_stages = shape.max_stages = 3;
  std::vector<double> grid{0.1, 0.5, 1.0, 2.0, 5.0};
  for (int i = 0; i < 5; ++i) {
    DynamicMeasure d(make_measure(MeasureSpec::glr(), random_tree(rng, shape)));
    ConsistencyReport r = check_time_consistency(d, grid, 40, 100 + i);
    CHECK_FALSE(r.counterexample);
    CHECK(r.report.passed());
    CHECK(r.report.find("criteria_agree")->passed);
  }
}

TEST_CASE("exponential utility with constant risk aversion is consistent") {
  auto sp = make_binomial_tree(3, 0.35);
  DynamicMeasure d(make_measure(MeasureSpec::exp_utility(0.7), sp));
  std::vector<double> grid{-3.0, -0.5, 0.0, 0.4, 0.8};
  CHECK_FALSE(check_time_consistency(d, grid, 60, 2).counterexample);
  CHECK_FALSE(search_counterexample(d, 4000, 2).counterexample);
}

TEST_CASE("LPM ratio on the two-step binomial tree has a counterexample") {
  DynamicMeasure d(make_measure(MeasureSpec::lpm_ratio(2.0), make_binomial_tree(2)));
  ConsistencyReport r = search_counterexample(d, 20000, 7);
  REQUIRE(r.counterexample);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->margin >= 1e-3);
  CHECK(verify_witness(d, *r.witness, 1e-12));
  CHECK_FALSE(r.report.find("no_counterexample")->passed);

  // same budget and seed, same witness
  ConsistencyReport again = search_counterexample(d, 20000, 7);
  CHECK(again.witness->x == r.witness->x);
}

TEST_CASE("the pinned LPM witness still holds") {
  auto sp = make_binomial_tree(2);
  DynamicMeasure d(make_measure(MeasureSpec::lpm_ratio(2.0), sp));
  auto j = io::read_json_file(std::string(PERFLAT_SOURCE_DIR) + "/fixtures/lpm_binomial_witness.json");
  Witness w{io::parse_xvar(j, sp), j["witness"]["s"].get<std::size_t>(),
            j["witness"]["t"].get<std::size_t>(), j["witness"]["z"].get<double>(), 0, 0.0};
  w.atom_s = sp->resolve_atom(w.s, j["witness"]["atom_s"].get<std::string>()).value();
  CHECK(verify_witness(d, w, 1e-12));
  TVar bt = d.evaluate(w.t, w.x), bs = d.evaluate(w.s, w.x);
  for (std::size_t a : sp->descendants(w.s, w.atom_s, w.t)) CHECK(bt[a] - w.z >= 1e-3);
  CHECK(w.z - bs[w.atom_s] >= 1e-3);
}

TEST_CASE("witness localization round trip") {
  DynamicMeasure d(make_measure(MeasureSpec::lpm_ratio(2.0), make_binomial_tree(2)));
  ConsistencyReport r = search_counterexample(d, 5000, 3);
  REQUIRE(r.witness.has_value());
  auto global = globalize_witness(d, *r.witness);
  REQUIRE(global.has_value());
  TVar bt = d.evaluate(r.witness->t, *global);
  for (double v : bt.values()) CHECK(v > r.witness->z);
  auto local = localize_witness(d, *global, r.witness->s, r.witness->t, r.witness->z);
  REQUIRE(local.has_value());
  CHECK(local->atom_s == r.witness->atom_s);
}

TEST_CASE("pathwise monotonicity of a risk-aversion process") {
  auto sp = make_binomial_tree(2);
  auto m = pathwise_monotonicity(RiskAversion::fixed(1.0), *sp);
  CHECK(m.nondecreasing);
  CHECK(m.nonincreasing);
  auto up = pathwise_monotonicity(RiskAversion::process({{1.0}, {1.5, 1.2}, {2.0, 1.6, 1.3, 1.2}}), *sp);
  CHECK(up.nondecreasing);
  CHECK_FALSE(up.nonincreasing);
}

TEST_CASE("risk-aversion orientation") {
  auto sp = make_binomial_tree(2);
  std::vector<double> grid{-2.0, -0.5, 0.0, 0.5, 0.9};
  Report flat = check_riskaversion_monotone_consistency(sp, RiskAversion::fixed(1.0), grid, 100, 4);
  CHECK(flat.passed());
  CHECK(flat.info["verdict"] == "consistent-on-sample");

  // increasing risk aversion: the checker finds a violation, so neither
  // orientation of the condition is sufficient here
  Report up = check_riskaversion_monotone_consistency(
      sp, RiskAversion::process({{0.5}, {2.0, 2.0}, {2.0, 2.0, 2.0, 2.0}}), grid, 200, 4);
  CHECK(up.info["verdict"] == "counterexample");
  CHECK_FALSE(up.find("nondecreasing_orientation")->passed);
  Report down = check_riskaversion_monotone_consistency(
      sp, RiskAversion::process({{2.0}, {0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}}), grid, 200, 4);
  CHECK(down.info["verdict"] == "counterexample");
  CHECK_FALSE(down.find("nonincreasing_orientation")->passed);
}

TEST_CASE("certainty equivalent is strongly time consistent") {
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    auto sp = random_tree(rng);
    auto ce = make_measure(MeasureSpec::certainty_equivalent(Utility::exponential(rng.uniform(0.5, 2.0))), sp);
    XVar x = random_xvar(rng, sp);
    std::size_t t = rng.index(1, sp->horizon());
    std::size_t s = rng.index(0, t - 1);
    TVar direct = ce->evaluate(s, x), nested = ce->evaluate(s, ce->evaluate(t, x).to_xvar());
    for (std::size_t a = 0; a < direct.size(); ++a) CHECK(nested[a] == doctest::Approx(direct[a]).epsilon(1e-9));
  }
}

TEST_CASE("GLR penalty nesting") {
  DynamicMeasure d(make_measure(MeasureSpec::glr(), make_binomial_tree(3, 0.45)));
  Report r = check_penalty_inequality_coherent(d, 1.0, 0, 2, 300, 6);
  CHECK(r.passed());
  DynamicMeasure lpm(make_measure(MeasureSpec::lpm_ratio(2.0), make_binomial_tree(2)));
  CHECK_THROWS_AS(check_penalty_inequality_coherent(lpm, 1.0, 0, 1, 10, 1), DomainError);
}
