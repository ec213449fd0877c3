#include <doctest.h>

#include <cmath>

#include "perflat/lattice.hpp"
#include "perflat/random.hpp"

using namespace perflat;

TEST_CASE("extended real conventions") {
  CHECK(ext::add(kInf, -kInf) == 0.0);
  CHECK(ext::add(-kInf, kInf) == 0.0);
  CHECK(ext::add(3.0, kInf) == kInf);
  CHECK(ext::mul(0.0, kInf) == 0.0);
  CHECK(ext::mul(kInf, 0.0) == 0.0);
  CHECK(ext::mul(2.0, kInf) == kInf);
  CHECK(ext::near(kInf, kInf, 1e-9));
  CHECK_FALSE(ext::near(kInf, 1e300, 1e-9));
  CHECK(ext::near_scaled(1e10, 1e10 + 1.0, 1e-9));
}

TEST_CASE("coin space conditional expectation and ess inf/sup") {
  auto sp = make_coin_space();
  XVar x(sp, {3.0, -1.0});
  CHECK(cond_expect(x, 0)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ess_inf_on_atoms(x, 0)[0] == -1.0);
  CHECK(ess_sup_on_atoms(x, 0)[0] == 3.0);
  TVar at_t = cond_expect(x, 1);
  CHECK(at_t[0] == 3.0);
  CHECK(at_t[1] == -1.0);
}

TEST_CASE("conditional expectation corner cases") {
  auto sp = make_binomial_tree(2, 0.3);
  XVar c = XVar::constant(sp, 4.25);
  for (std::size_t t = 0; t <= 2; ++t) {
    TVar e = cond_expect(c, t);
    for (double v : e.values()) CHECK(v == doctest::Approx(4.25).epsilon(1e-15));
  }

  XVar x(sp, {kInf, 1.0, 2.0, 3.0});
  TVar e1 = cond_expect(x, 1);
  CHECK(e1[0] == kInf);
  CHECK(e1[1] == doctest::Approx(2.0 * 0.3 / 1.0 + 3.0 * 0.7));
  CHECK(cond_expect(x, 0)[0] == kInf);

  SUBCASE("Q weights") {
    std::vector<double> q{0.5, 0.0, 0.25, 0.25};
    CHECK(cond_expect(x, 1, std::span<const double>(q))[0] == kInf);
    std::vector<double> q2{0.0, 0.5, 0.25, 0.25};
    CHECK(cond_expect(x, 0, std::span<const double>(q2))[0] == doctest::Approx(0.5 + 0.5 + 0.75));
    std::vector<double> bad{0.5, 0.5, 0.5, -0.5};
    CHECK_THROWS_AS(cond_expect(x, 0, std::span<const double>(bad)), DomainError);
  }
}

TEST_CASE("paste selects leafwise") {
  auto sp = make_coin_space();
  XVar x1(sp, {3.0, -1.0}), x2(sp, {7.0, 5.0});
  EventMask b(sp, 1, {false, true});
  XVar p = paste(x1, x2, b);
  CHECK(p[0] == 7.0);
  CHECK(p[1] == -1.0);
  CHECK(paste(x1, x2, EventMask::all(sp, 1)) == x1);
  CHECK(paste(x1, x2, EventMask::none(sp, 1)) == x2);
}

TEST_CASE("space invariants name the failing rule") {
  auto expect_invariant = [](auto fn, const std::string& name) {
    try {
      fn();
      FAIL("no error for " << name);
    } catch (const ValidationError& e) {
      CHECK(e.invariant() == name);
    }
  };
  using P = FilteredSpace::Partition;
  expect_invariant([] { FilteredSpace::create({"a", "b"}, {0.5, 0.4}, {P{{0, 1}}, P{{0}, {1}}}); },
                   "probabilities_sum_to_one");
  expect_invariant([] { FilteredSpace::create({"a", "b"}, {1.0, 0.0}, {P{{0, 1}}, P{{0}, {1}}}); },
                   "positive_probability");
  expect_invariant([] { FilteredSpace::create({"a", "a"}, {0.5, 0.5}, {P{{0, 1}}, P{{0}, {1}}}); },
                   "unique_leaf_ids");
  expect_invariant([] { FilteredSpace::create({"a", "b"}, {0.5, 0.5}, {P{{0}, {1}}, P{{0}, {1}}}); },
                   "root_atom");
  expect_invariant([] { FilteredSpace::create({"a", "b"}, {0.5, 0.5}, {P{{0, 1}}, P{{0, 1}}}); },
                   "terminal_singletons");
  expect_invariant(
      [] {
        FilteredSpace::create({"a", "b", "c"}, {0.2, 0.3, 0.5},
                              {P{{0, 1, 2}}, P{{0, 1}, {2}}, P{{0}, {1, 2}}, P{{0}, {1}, {2}}});
      },
      "refinement");
  expect_invariant([] { FilteredSpace::create({"a", "b"}, {0.5, 0.5}, {P{{0, 1}}, P{{0}}}); },
                   "partition");
}

TEST_CASE("binomial tree structure") {
  auto sp = make_binomial_tree(2, 0.5);
  CHECK(sp->horizon() == 2);
  CHECK(sp->leaf_ids() == std::vector<std::string>{"uu", "ud", "du", "dd"});
  CHECK(sp->atom_count(1) == 2);
  CHECK(sp->ancestor(0, 2, 3) == 0);
  CHECK(sp->ancestor(1, 2, 2) == 1);
  CHECK(sp->descendants(1, 0, 2) == std::vector<std::size_t>{0, 1});
  CHECK(sp->atom_probability(1, 1) == doctest::Approx(0.5));
  CHECK(FilteredSpace::atom_id(1, 0) == "a1_0");
  CHECK(sp->resolve_atom(2, "du").value() == 2);
  CHECK(sp->resolve_atom(1, "a1_1").value() == 1);
  CHECK_FALSE(sp->resolve_atom(1, "zz").has_value());
  CHECK_THROWS_AS(sp->check_stage(3), DomainError);
}

TEST_CASE("variables reject -inf and NaN") {
  auto sp = make_coin_space();
  CHECK_THROWS(XVar(sp, {-kInf, 0.0}));
  CHECK_THROWS(XVar(sp, {std::nan(""), 0.0}));
  CHECK_THROWS(XVar(sp, {1.0}));
  CHECK_NOTHROW(XVar(sp, {kInf, 0.0}));
  TVar ba(sp, 0, {-kInf});
  CHECK(ba.bounded_above());
  CHECK_FALSE(ba.bounded_below());
}

TEST_CASE("tolerances must be positive") {
  Tolerances t;
  CHECK_NOTHROW(t.validate());
  t.tol_c = 0.0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("random trees respect the shape") {
  Rng rng(42);
  TreeShape shape;
  for (int i = 0; i < 50; ++i) {
    auto sp = random_tree(rng, shape);
    CHECK(sp->leaf_count() <= shape.max_leaves);
    CHECK(sp->horizon() >= shape.min_stages);
    CHECK(sp->horizon() <= shape.max_stages);
    double total = 0.0;
    for (double p : sp->probabilities()) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tower property on random trees") {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    auto sp = random_tree(rng);
    XVar x = random_xvar(rng, sp);
    TVar inner = cond_expect(x, 1);
    TVar outer = cond_expect(inner.to_xvar(), 0);
    CHECK(outer[0] == doctest::Approx(cond_expect(x, 0)[0]).epsilon(1e-12));
  }
}
