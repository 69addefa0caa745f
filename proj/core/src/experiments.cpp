// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace wc4dvar {

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > 0.0) || count < 1) {
    throw ParameterError("log_spaced: need lo, hi > 0 and count >= 1");
  }
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) {
    v[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  }
  // Keep the end points exact.
  v.front() = lo;
  v.back() = hi;
  return v;
}

void ExperimentGrid::validate() const {
  if (c_dinv.empty() || rho.empty() || p.empty() || modes.empty() || variants.empty()) {
    throw ParameterError("ExperimentGrid: every grid must be nonempty");
  }
  for (double r : rho) {
    if (!(r > 0.0 && r < 1.0)) throw ParameterError("ExperimentGrid: rho must lie in (0, 1)");
  }
  for (double c : c_dinv) {
    if (!(c > 0.0)) throw ParameterError("ExperimentGrid: c_dinv must be > 0");
  }
  for (int q : p) {
    if (q < 1) throw ParameterError("ExperimentGrid: p must be >= 1");
  }
  for (const auto &v : variants) v.validate();
}

ReferenceOptimum reference_optimum(const NonlinearProblem &problem, const Vector &x0,
                                   int max_outer) {
  if (max_outer < 1) throw ParameterError("reference_optimum: max_outer must be >= 1");
  GNControls c;
  c.max_outer = max_outer;
  c.full_accuracy_inner = true;
  c.max_inner = 5000;
  c.gradient_tolerance = 1e-10;
  c.stagnation_tolerance = 1e-12;
  c.check_consistency = false;
  const RunTrace t = run_variant(problem, x0, VariantSpec::parse("STQ1-S-M"), c);

  ReferenceOptimum r;
  r.status = t.status;
  r.outer_iterations = t.n_outer();
  if (t.status == RunStatus::failed) {
    throw NumericalError("reference_optimum: STQ1-S-M failed: " + t.message);
  }
  // A round-off non-descent direction after at least one step is the
  // same as stagnation.
  const bool ok = t.status == RunStatus::converged || t.status == RunStatus::stagnated ||
                  (t.status == RunStatus::non_descent && t.n_outer() > 1);
  if (!ok) {
    throw NumericalError("reference_optimum: no convergence within " +
                         std::to_string(max_outer) + " outer iterations (J = " +
                         std::to_string(t.J_final) + ")");
  }
  r.x = t.x_final;
  const JAndGradient jg = evaluate_J_and_gradient(problem, r.x);
  r.J = jg.J;
  r.grad_norm = jg.g.norm();
  return r;
}

const VariantResult *ResultsStore::find(const std::string &name) const {
  for (const auto &r : results) {
    if (r.trace.variant == name) return &r;
  }
  return nullptr;
}

ResultsStore run_matrix(const NonlinearProblem &problem, const Vector &x0,
                        const ExperimentGrid &grid, const GNControls &controls,
                        const MatrixOptions &options) {
  grid.validate();
  controls.validate();
  ResultsStore store;
  store.J0 = evaluate_J(problem, x0);
  store.num_subwindows = problem.num_subwindows();
  store.results.resize(grid.variants.size());

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(grid.variants.size()));

  std::atomic<std::size_t> next{0};
  std::mutex merge;
  auto work = [&] {
    for (std::size_t i = next++; i < grid.variants.size(); i = next++) {
      VariantResult r;
      r.variant = grid.variants[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        r.trace = run_variant(problem, x0, r.variant, controls);
      } catch (const std::exception &e) {
        // run_variant records solver failures itself; this catches setup errors.
        r.trace.variant = r.variant.name();
        r.trace.status = RunStatus::failed;
        r.trace.message = e.what();
        r.trace.J_initial = store.J0;
        r.trace.J_final = store.J0;
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::lock_guard lock(merge);
      store.results[i] = std::move(r);
      if (options.on_result) options.on_result(store.results[i]);
    }
  };

  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  return store;
}

bool passes_filter(const RunTrace &trace, double J0, double J_star, double rho) {
  if (trace.status == RunStatus::failed || !std::isfinite(trace.J_final)) return false;
  return trace.J_final - J_star <= rho * (J0 - J_star);
}

std::vector<MapCell> best_method_map(const ResultsStore &store, const ExperimentGrid &grid,
                                     double J0, double J_star, Index num_subwindows) {
  grid.validate();
  if (!std::isfinite(J_star)) throw ParameterError("best_method_map: J_star is not set");

  std::vector<MapCell> cells;
  for (CostMode mode : grid.modes) {
    for (int p : grid.p) {
      for (double c : grid.c_dinv) {
        CostParams params;
        params.num_subwindows = num_subwindows;
        params.p = p;
        params.c_Dinv = c;
        params.mode = mode;
        std::vector<double> cost(store.results.size());
        for (std::size_t i = 0; i < store.results.size(); ++i) {
          const auto &r = store.results[i];
          cost[i] = variant_cost(r.trace, r.variant, params);
        }
        for (double rho : grid.rho) {
          MapCell cell;
          cell.c_dinv = c;
          cell.rho = rho;
          cell.p = p;
          cell.mode = mode;
          for (std::size_t i = 0; i < store.results.size(); ++i) {
            const auto &r = store.results[i];
            if (!passes_filter(r.trace, J0, J_star, rho)) continue;
            const std::string name = r.variant.name();
            cell.passed.push_back(name);
            if (cell.winner.empty() || cost[i] < cell.min_cost ||
                (cost[i] == cell.min_cost && name < cell.winner)) {
              cell.winner = name;
              cell.min_cost = cost[i];
            }
          }
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

}  // namespace wc4dvar
