// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/burgers.hpp"
#include "wc4dvar/costmodel.hpp"
#include "wc4dvar/formulations.hpp"
#include "wc4dvar/gaussnewton.hpp"

#include <benchmark/benchmark.h>

using namespace wc4dvar;

namespace {

const BurgersProblem &problem() {
  static const BurgersProblem p = generate_problem(BurgersConfig{});
  return p;
}

const GNSubproblem &subproblem() {
  static const GNSubproblem s = linearize(problem(), problem().first_guess(), ModelApprox::zero);
  return s;
}

Vector ones(Index n) { return Vector::Ones(n); }

}  // namespace

static void BM_BurgersStep(benchmark::State &state) {
  const auto &c = problem().config();
  Vector u = problem().background();
  for (auto _ : state) {
    benchmark::DoNotOptimize(u = burgers_step(u, 0, c));
  }
}
BENCHMARK(BM_BurgersStep);

static void BM_EvaluateJ(benchmark::State &state) {
  const Vector &x = problem().first_guess();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_J(problem(), x));
}
BENCHMARK(BM_EvaluateJ)->Unit(benchmark::kMillisecond);

static void BM_JAndGradient(benchmark::State &state) {
  const Vector &x = problem().first_guess();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_J_and_gradient(problem(), x));
}
BENCHMARK(BM_JAndGradient)->Unit(benchmark::kMillisecond);

static void BM_Linearize(benchmark::State &state) {
  const Vector &x = problem().first_guess();
  for (auto _ : state) benchmark::DoNotOptimize(linearize(problem(), x, ModelApprox::zero));
}
BENCHMARK(BM_Linearize)->Unit(benchmark::kMillisecond);

static void BM_SaddleMatvec(benchmark::State &state) {
  const auto &sub = subproblem();
  const Vector v = ones(SaddleLayout(sub).total());
  for (auto _ : state) benchmark::DoNotOptimize(saddle_matvec(sub, v));
}
BENCHMARK(BM_SaddleMatvec)->Unit(benchmark::kMillisecond);

static void BM_PMInverse(benchmark::State &state) {
  const auto &sub = subproblem();
  const Vector v = ones(SaddleLayout(sub).total());
  for (auto _ : state) benchmark::DoNotOptimize(apply_PM_inverse(sub, v));
}
BENCHMARK(BM_PMInverse)->Unit(benchmark::kMicrosecond);

static void BM_DinvExactVsCG(benchmark::State &state) {
  const auto &D = problem().state_covariance();
  const auto Dk = state.range(0) == 0 ? D : D.with_inverse_mode(InverseMode::cg(static_cast<int>(state.range(0))));
  const Vector v = ones(D.layout().total());
  for (auto _ : state) benchmark::DoNotOptimize(Dk.apply_inverse(v));
}
BENCHMARK(BM_DinvExactVsCG)->Arg(0)->Arg(5)->Arg(25)->Unit(benchmark::kMicrosecond);

static void BM_VariantCost(benchmark::State &state) {
  const VariantSpec v = VariantSpec::parse("SAQ15-M-I");
  CostParams p;
  p.p = 25;
  for (auto _ : state) benchmark::DoNotOptimize(variant_cost(v, {10, 500, 40}, p).total);
}
BENCHMARK(BM_VariantCost);
BENCHMARK_MAIN();
