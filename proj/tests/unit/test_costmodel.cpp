// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/costmodel.hpp"

#include <doctest.h>

using namespace wc4dvar;

namespace {

CostParams params_p(int p, double c_dinv = 0.5, CostMode mode = CostMode::fully_mpi) {
  CostParams c;
  c.p = p;
  c.c_Dinv = c_dinv;
  c.mode = mode;
  return c;
}

const std::vector<VariantSpec> &some_variants() {
  static const std::vector<VariantSpec> v = [] {
    std::vector<VariantSpec> out;
    for (const char *n : {"SAQ1-M-0", "SAQ15-M-M", "SAQ1-n", "SAQ1-T-I", "SAQ1-B-0", "SAQ0-M-0",
                          "STQ1-S-0", "STQ1-S-M", "STQ1-n", "FOQ1-D", "FOQ1-n"}) {
      out.push_back(VariantSpec::parse(n));
    }
    return out;
  }();
  return v;
}

}  // namespace

TEST_CASE("pi_p") {
  const std::vector<double> ones(50, 1.0);
  CHECK(pi_p(ones, 1) == 50.0);
  CHECK(pi_p(ones, 50) == 1.0);
  CHECK(pi_p(ones, 25) == 2.0);
  CHECK(pi_p(ones, 15) == 4.0);
  CHECK(pi_p(ones, 100) == 1.0);
  // a dominant task bounds the parallel cost from below
  CHECK(pi_p({1.0, 3.0}, 2) == 3.0);
  CHECK(pi_p({1.0, 3.0}, 1) == 4.0);
  CHECK_THROWS_AS(pi_p({}, 1), ParameterError);
  CHECK_THROWS_AS(pi_p(ones, 0), ParameterError);
}

TEST_CASE("building-block costs") {
  SUBCASE("p = 1") {
    const CostTable t = building_block_costs(params_p(1));
    CHECK(t.M == 1.0);
    CHECK(t.calH == doctest::Approx(0.05));
    CHECK(t.D == doctest::Approx(0.5));
    CHECK(t.R == doctest::Approx(0.01));
    CHECK(t.Rinv == doctest::Approx(0.01));
    CHECK(t.H == doctest::Approx(0.1));
    CHECK(t.HT == doctest::Approx(0.1));
    CHECK(t.L == doctest::Approx(2.0));
    CHECK(t.LT == doctest::Approx(4.0));
    CHECK(t.Linv == 2.0);
    CHECK(t.LinvT == 4.0);
    CHECK(t.Dinv == 0.5);
    CHECK(t.Ltilde == 0.0);
  }
  SUBCASE("p = 50") {
    const CostTable t = building_block_costs(params_p(50));
    CHECK(t.M == 1.0);
    CHECK(t.calH == doctest::Approx(0.001));
    CHECK(t.D == doctest::Approx(0.01));
    CHECK(t.R == doctest::Approx(0.0002));
    CHECK(t.H == doctest::Approx(0.002));
    CHECK(t.L == doctest::Approx(0.04));
    CHECK(t.LT == doctest::Approx(0.08));
    CHECK(t.Linv == 2.0);
    CHECK(t.LinvT == 4.0);
    CHECK(t.Dinv == 0.5);
  }
  SUBCASE("D^{-1} scaled with p on request") {
    CostParams c = params_p(50, 2.0);
    c.scale_dinv_with_p = true;
    CHECK(building_block_costs(c).Dinv == doctest::Approx(0.04));
  }
  SUBCASE("sequential ignores p") {
    const CostTable t = building_block_costs(params_p(50, 0.5, CostMode::sequential));
    CHECK(t.L == doctest::Approx(2.0));
  }
  SUBCASE("exact model approximation costs L") {
    const CostTable t = costs_for_variant(params_p(1), VariantSpec::parse("SAQ1-M-M"));
    CHECK(t.Ltilde == t.L);
    CHECK(t.Ltilde_inv == t.Linv);
    CHECK(t.Ltilde_invT == t.LinvT);
    const CostTable z = costs_for_variant(params_p(1), VariantSpec::parse("SAQ1-M-0"));
    CHECK(z.Ltilde_inv == 0.0);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(building_block_costs(params_p(0)), ParameterError);
    CHECK_THROWS_AS(building_block_costs(params_p(1, 0.0)), ParameterError);
  }
}

TEST_CASE("per-quantity costs at p = 1") {
  const auto b = variant_cost(VariantSpec::parse("SAQ1-M-0"), {1, 0, 0}, params_p(1));
  // c_q = c_L + c_Dinv + c_H + c_Rinv = 2 + 0.5 + 0.1 + 0.01
  CHECK(b.c_q == doctest::Approx(2.61).epsilon(1e-14));
  // c_J = 1 + 0.05 + 4 + 0.5 + 0.1 + 0.01
  CHECK(b.c_J == doctest::Approx(5.66).epsilon(1e-14));
  // c_K = L + D + L^T + H + H^T + R
  CHECK(b.c_K == doctest::Approx(6.71).epsilon(1e-14));
  // P_M with Mtilde = 0: D + R^{-1}
  CHECK(b.c_P == doctest::Approx(0.51).epsilon(1e-14));
  CHECK(b.total == doctest::Approx(b.c_J + b.c_P).epsilon(1e-14));
}

TEST_CASE("cost totals are linear in the iteration counts") {
  const CostParams c = params_p(15);
  for (const auto &v : some_variants()) {
    CAPTURE(v.name());
    const double a = variant_cost(v, {2, 10, 3}, c).total;
    const double b = variant_cost(v, {4, 20, 6}, c).total;
    CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-13));
    const auto bd = variant_cost(v, {1, 0, 0}, c);
    const auto bi = variant_cost(v, {1, 1, 0}, c);
    CHECK(bi.total - bd.total == doctest::Approx(v.formulation == Formulation::saddle
                                                     ? bd.c_K + bd.c_P
                                                 : v.formulation == Formulation::state
                                                     ? bd.c_K + bd.c_P
                                                     : bd.c_K)
                                     .epsilon(1e-12));
  }
}

TEST_CASE("hybrid mode never costs more than fully MPI") {
  for (int p : {1, 15, 25, 50}) {
    for (double cd : {0.5, 10.0}) {
      for (const auto &v : some_variants()) {
        CAPTURE(v.name());
        const double mpi = variant_cost(v, {3, 40, 5}, params_p(p, cd)).total;
        const double hyb = variant_cost(v, {3, 40, 5}, params_p(p, cd, CostMode::hybrid)).total;
        CHECK(hyb <= mpi * (1.0 + 1e-14));
      }
    }
  }
}

TEST_CASE("costs are monotone in c_Dinv and in p") {
  for (const auto &v : some_variants()) {
    CAPTURE(v.name());
    double prev = 0.0;
    for (double cd : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double t = variant_cost(v, {3, 40, 5}, params_p(15, cd)).total;
      CHECK(t >= prev);
      prev = t;
    }
    prev = std::numeric_limits<double>::infinity();
    for (int p : {1, 15, 25, 50}) {
      const double t = variant_cost(v, {3, 40, 5}, params_p(p)).total;
      CHECK(t <= prev);
      prev = t;
    }
  }
}

TEST_CASE("forcing formulation keeps L^{-1} sequential") {
  const VariantSpec v = VariantSpec::parse("FOQ1-D");
  const auto a = variant_cost(v, {1, 10, 0}, params_p(1));
  const auto b = variant_cost(v, {1, 10, 0}, params_p(50));
  // Per-iteration cost at p = 50 is dominated by L^{-1} + L^{-T} = 6.
  CHECK(b.c_K > 6.0);
  CHECK(a.c_K - b.c_K < 1.0);
  // The hybrid setting does not change it.
  CHECK(variant_cost(v, {1, 10, 0}, params_p(50, 0.5, CostMode::hybrid)).total ==
        doctest::Approx(b.total));
}

TEST_CASE("cost from a trace") {
  RunTrace t;
  OuterRecord o;
  o.inner_iterations = 7;
  o.q_evaluations = 2;
  t.outer = {o, o};
  const auto in = cost_inputs(t);
  CHECK(in.n_outer == 2);
  CHECK(in.n_inner == 14);
  CHECK(in.n_q == 4);
  const VariantSpec v = VariantSpec::parse("SAQ1-M-0");
  CHECK(variant_cost(t, v, params_p(1)) == variant_cost(v, in, params_p(1)).total);
}

TEST_CASE("cost mode names") {
  CHECK(parse_cost_mode("hybrid") == CostMode::hybrid);
  CHECK(parse_cost_mode(to_string(CostMode::fully_mpi)) == CostMode::fully_mpi);
  CHECK_THROWS_AS(parse_cost_mode("openmp"), ParameterError);
}
