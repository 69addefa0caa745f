// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/costmodel.hpp"
#include "wc4dvar/gaussnewton.hpp"
#include "wc4dvar/problem.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace wc4dvar {

/// `count` values from lo to hi, equally spaced in log10.
std::vector<double> log_spaced(double lo, double hi, int count);

struct ExperimentGrid {
  std::vector<double> c_dinv{0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<double> rho = log_spaced(1e-3, 1e-1, 9);
  std::vector<int> p{1, 15, 25, 50};
  std::vector<CostMode> modes{CostMode::fully_mpi};
  std::vector<VariantSpec> variants = default_variant_list();

  void validate() const;
};

struct ReferenceOptimum {
  Vector x;
  double J = 0.0;
  double grad_norm = 0.0;
  int outer_iterations = 0;
  RunStatus status = RunStatus::completed;
};

/// STQ1-S-M with full-accuracy inner solves, stopped when ||g|| <= 1e-10 or
/// the relative change in J drops below 1e-12. Throws NumericalError if
/// neither happens within max_outer iterations or the run fails.
ReferenceOptimum reference_optimum(const NonlinearProblem &problem, const Vector &x0,
                                   int max_outer = 50);

struct VariantResult {
  VariantSpec variant;
  RunTrace trace;
  double seconds = 0.0;
};

/// Traces of one problem, one per variant, in grid order.
struct ResultsStore {
  double J0 = 0.0;
  double J_star = std::numeric_limits<double>::quiet_NaN();
  Index num_subwindows = 0;
  std::vector<VariantResult> results;

  /// nullptr if absent.
  const VariantResult *find(const std::string &name) const;
};

struct MatrixOptions {
  /// Worker threads; 0 means std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Called once per finished variant, under the store's merge lock.
  std::function<void(const VariantResult &)> on_result;
};

/// Runs every variant of the grid from x0. A failing variant is recorded
/// with status failed and the matrix carries on.
ResultsStore run_matrix(const NonlinearProblem &problem, const Vector &x0,
                        const ExperimentGrid &grid, const GNControls &controls,
                        const MatrixOptions &options = {});

/// J_final - J* <= rho (J0 - J*). Failed runs never pass.
bool passes_filter(const RunTrace &trace, double J0, double J_star, double rho);

struct MapCell {
  double c_dinv = 0.0;
  double rho = 0.0;
  int p = 1;
  CostMode mode = CostMode::fully_mpi;
  std::string winner;  // empty when no variant passes
  double min_cost = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> passed;
};

/// One cell per (mode, p, c_dinv, rho), in that nesting order. Ties on cost
/// go to the lexicographically smaller variant name.
std::vector<MapCell> best_method_map(const ResultsStore &store, const ExperimentGrid &grid,
                                     double J0, double J_star, Index num_subwindows);

}  // namespace wc4dvar
