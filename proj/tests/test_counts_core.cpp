#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "incmi/contingency.hpp"
#include "helpers.hpp"

using namespace incmi;

TEST_CASE("tabulate maps observed, half-missing and dropped instances") {
  std::vector<Observation> obs = {{0, 0}, {0, 1}, {1, 0}};
  ContingencyTable t = tabulate(obs, 2, 2);
  CHECK(t.joint(0, 0) == 1);
  CHECK(t.joint(0, 1) == 1);
  CHECK(t.joint(1, 0) == 1);
  CHECK(t.joint(1, 1) == 0);
  CHECK(t.row_missing.isZero());
  CHECK(t.col_missing.isZero());

  ContingencyTable u = tabulate({{0, std::nullopt}, {std::nullopt, 1}}, 2, 2);
  CHECK(u.joint.isZero());
  CHECK(u.row_missing(0) == 1);
  CHECK(u.row_missing(1) == 0);
  CHECK(u.col_missing(1) == 1);
  CHECK(u.total() == 2);

  ContingencyTable v = tabulate({{std::nullopt, std::nullopt}}, 2, 2);
  CHECK(v.total() == 0);
  CHECK(v.dropped == 1);
}

TEST_CASE("tabulate rejects out-of-range categories with index and bound") {
  CHECK_THROWS_WITH(tabulate({{2, 0}}, 2, 3), Catch::Matchers::ContainsSubstring("class index 2") &&
                                                  Catch::Matchers::ContainsSubstring("[0, 2)"));
  CHECK_THROWS_AS(tabulate({{0, 5}}, 2, 3), input_error);
}

TEST_CASE("tabulate is permutation invariant and conserves totals") {
  std::mt19937_64 rng(7);
  std::vector<Observation> obs;
  std::uniform_int_distribution<int> cat(0, 2);
  for (int k = 0; k < 200; ++k) {
    Observation o;
    if (cat(rng) != 0) o.cls = cat(rng);
    if (cat(rng) != 0) o.feature = cat(rng);
    obs.push_back(o);
  }
  ContingencyTable a = tabulate(obs, 3, 3);
  std::shuffle(obs.begin(), obs.end(), rng);
  ContingencyTable b = tabulate(obs, 3, 3);
  CHECK(test_helpers::exact_equal(a.joint, b.joint));
  CHECK(test_helpers::exact_equal(a.row_missing, b.row_missing));
  CHECK(test_helpers::exact_equal(a.col_missing, b.col_missing));
  long observed = 0;
  for (const auto& o : obs) observed += (o.cls || o.feature) ? 1 : 0;
  CHECK(a.total() == static_cast<double>(observed));
}

TEST_CASE("apply_prior exponents per prior kind") {
  ContingencyTable t(2, 2);
  t.joint << 3, 1, 1, 3;

  SECTION("uniform is the identity on joint exponents") {
    EffectiveCounts e = apply_prior(t, {PriorKind::uniform});
    CHECK(test_helpers::exact_equal(e.joint, t.joint));
  }
  SECTION("perks on an empty table goes negative, clamp restores the floor") {
    ContingencyTable zero(2, 2);
    EffectiveCounts e = apply_prior(zero, {PriorKind::perks});
    CHECK(e.joint(0, 0) == Catch::Approx(0.25 - 1.0));
    EffectiveCounts clamped = e.clamped_for_covariance();
    CHECK(clamped.joint.minCoeff() == EffectiveCounts::exponent_floor);
  }
  SECTION("custom pseudo-count") {
    ContingencyTable u(1, 2);
    u.joint << 2, 0;
    EffectiveCounts e = apply_prior(u, {PriorKind::custom, 1.5});
    CHECK(e.joint(0, 0) == Catch::Approx(2.5));
  }
  SECTION("jeffreys and haldane weights") {
    CHECK(apply_prior(t, {PriorKind::jeffreys}).joint(0, 0) == Catch::Approx(2.5));
    CHECK(apply_prior(t, {PriorKind::haldane}).joint(0, 1) == Catch::Approx(0.0));
  }
  SECTION("margin-missing counts pass through") {
    t.row_missing << 2, 0;
    EffectiveCounts e = apply_prior(t, {PriorKind::jeffreys});
    CHECK(e.row_missing(0) == 2);
  }
}

TEST_CASE("transpose swaps roles and is an involution") {
  ContingencyTable t(2, 2);
  t.joint << 1, 2, 3, 4;
  t.row_missing << 5, 6;
  t.col_missing << 7, 8;
  ContingencyTable u = transpose(t);
  CHECK(u.joint(0, 1) == 3);
  CHECK(u.row_missing(0) == 7);
  CHECK(u.col_missing(1) == 6);
  ContingencyTable v = transpose(u);
  CHECK(test_helpers::exact_equal(v.joint, t.joint));
  CHECK(test_helpers::exact_equal(v.row_missing, t.row_missing));
  CHECK(test_helpers::exact_equal(v.col_missing, t.col_missing));

  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    ContingencyTable w = test_helpers::random_table(rng);
    ContingencyTable ww = transpose(transpose(w));
    CHECK(test_helpers::exact_equal(ww.joint, w.joint));
    CHECK(test_helpers::exact_equal(ww.row_missing, w.row_missing));
    CHECK(test_helpers::exact_equal(ww.col_missing, w.col_missing));
  }
}

TEST_CASE("chance matrix marginals match row and column sums") {
  Matrix pi(2, 2);
  pi << 0.4, 0.1, 0.1, 0.4;
  ChanceMatrix m(pi);
  CHECK(m.row_sum(0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(m.col_sum(1) == Catch::Approx(0.5).margin(1e-12));
  CHECK(m.cell.sum() == Catch::Approx(1.0).margin(1e-12));
}
