// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/gaussnewton.hpp"

#include <string>
#include <vector>

namespace wc4dvar {

enum class CostMode { sequential, fully_mpi, hybrid };

const char *to_string(CostMode m);
CostMode parse_cost_mode(const std::string &s);

/// Costs are in units of one model integration over the whole window.
struct CostParams {
  Index num_subwindows = 50;
  int p = 1;
  /// Cost of one D^{-1} application on a single process.
  double c_Dinv = 0.5;
  CostMode mode = CostMode::fully_mpi;
  /// By default c_Dinv does not depend on p. When set it shrinks like the
  /// block-diagonal operators, c_Dinv * pi_p(e) / Nsw.
  bool scale_dinv_with_p = false;
  /// Costs of Ltilde^{-1} and Ltilde^{-T} for the 0 and I model
  /// approximations. With Mtilde = M they are those of L^{-1} and L^{-T}.
  double c_Ltilde_inv = 0.0;
  double c_Ltilde_invT = 0.0;

  void validate() const;
};

struct CostTable {
  double M = 0, calH = 0, D = 0, Dinv = 0, R = 0, Rinv = 0, H = 0, HT = 0;
  double L = 0, LT = 0, Linv = 0, LinvT = 0;
  double Ltilde = 0, Ltilde_inv = 0, Ltilde_invT = 0;
};

/// max(ceil(k/p) * mean(c), max(c)).
double pi_p(const std::vector<double> &costs, int p);

/// Building-block costs for the given parameters; the Ltilde entries are
/// those of the 0/I approximations (see costs_for_variant).
CostTable building_block_costs(const CostParams &params);

/// Building-block costs with the Ltilde entries adjusted to the variant.
CostTable costs_for_variant(const CostParams &params, const VariantSpec &variant);

/// Iteration counts a cost is computed from.
struct CostInputs {
  int n_outer = 0;
  int n_inner = 0;
  int n_q = 0;  // q_st evaluations (saddle variants)
};

CostInputs cost_inputs(const RunTrace &trace);

struct CostBreakdown {
  double c_q = 0;
  double c_J = 0;
  double c_K = 0;
  double c_P = 0;    // preconditioner application
  double c_rhs = 0;
  double total = 0;
};

/// In sequential mode p is forced to 1.
CostBreakdown variant_cost(const VariantSpec &variant, const CostInputs &inputs,
                           const CostParams &params);
double variant_cost(const RunTrace &trace, const VariantSpec &variant, const CostParams &params);

}  // namespace wc4dvar
