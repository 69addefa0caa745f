// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wc4dvar {

namespace {

double pi2(double a, double b) { return pi_p({a, b}, 2); }

}  // namespace

const char *to_string(CostMode m) {
  switch (m) {
    case CostMode::sequential: return "sequential";
    case CostMode::fully_mpi: return "fully_mpi";
    case CostMode::hybrid: return "hybrid";
  }
  return "?";
}

CostMode parse_cost_mode(const std::string &s) {
  if (s == "sequential") return CostMode::sequential;
  if (s == "fully_mpi" || s == "mpi") return CostMode::fully_mpi;
  if (s == "hybrid") return CostMode::hybrid;
  throw ParameterError("unknown cost mode '" + s + "'");
}

void CostParams::validate() const {
  if (num_subwindows < 1) throw ParameterError("CostParams: num_subwindows must be >= 1");
  if (p < 1) throw ParameterError("CostParams: p must be >= 1");
  if (!(c_Dinv > 0.0)) throw ParameterError("CostParams: c_Dinv must be > 0");
  if (c_Ltilde_inv < 0.0 || c_Ltilde_invT < 0.0) {
    throw ParameterError("CostParams: Ltilde costs must be >= 0");
  }
}

double pi_p(const std::vector<double> &costs, int p) {
  if (costs.empty()) throw ParameterError("pi_p: empty cost sequence");
  if (p < 1) throw ParameterError("pi_p: p must be >= 1");
  const auto k = static_cast<double>(costs.size());
  const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / k;
  const double rounds = std::ceil(k / static_cast<double>(p));
  return std::max(rounds * mean, *std::max_element(costs.begin(), costs.end()));
}

CostTable building_block_costs(const CostParams &params) {
  params.validate();
  const int p = params.mode == CostMode::sequential ? 1 : params.p;
  const auto nsw = static_cast<double>(params.num_subwindows);
  // pi_p of Nsw unit tasks is ceil(Nsw / p).
  const double pi = std::ceil(nsw / p);
  CostTable t;
  t.M = 1.0;
  t.calH = pi / (20.0 * nsw);
  t.D = pi / (2.0 * nsw);
  t.R = pi / (100.0 * nsw);
  t.Rinv = pi / (100.0 * nsw);
  t.H = pi / (10.0 * nsw);
  t.HT = pi / (10.0 * nsw);
  t.L = 2.0 * pi / nsw;
  t.LT = 4.0 * pi / nsw;
  t.Linv = 2.0;
  t.LinvT = 4.0;
  t.Dinv = params.scale_dinv_with_p ? params.c_Dinv * pi / nsw : params.c_Dinv;
  t.Ltilde = 0.0;
  t.Ltilde_inv = params.c_Ltilde_inv;
  t.Ltilde_invT = params.c_Ltilde_invT;
  return t;
}

CostTable costs_for_variant(const CostParams &params, const VariantSpec &variant) {
  CostTable t = building_block_costs(params);
  if (variant.uses_model_approx() && variant.approx == ModelApprox::exact) {
    t.Ltilde = t.L;
    t.Ltilde_inv = t.Linv;
    t.Ltilde_invT = t.LinvT;
  }
  return t;
}

CostInputs cost_inputs(const RunTrace &trace) {
  return {trace.n_outer(), trace.total_inner(), trace.total_q_evaluations()};
}

CostBreakdown variant_cost(const VariantSpec &variant, const CostInputs &in,
                           const CostParams &params) {
  variant.validate();
  const CostTable c = costs_for_variant(params, variant);
  const bool hybrid = params.mode == CostMode::hybrid;
  const double no = in.n_outer;
  const double ni = in.n_inner;
  const double nq = in.n_q;
  const bool precond = variant.preconditioner != PreconditionerType::none;
  const double c_S = c.Ltilde_invT + c.D + c.Ltilde_inv;

  CostBreakdown b;
  b.c_q = hybrid ? pi2(c.L + c.Dinv, c.H + c.Rinv) : c.L + c.Dinv + c.H + c.Rinv;
  b.c_J = hybrid ? c.M + c.calH + pi2(c.LT + c.Dinv, c.HT + c.Rinv)
                 : c.M + c.calH + c.LT + c.Dinv + c.HT + c.Rinv;

  switch (variant.formulation) {
    case Formulation::saddle: {
      b.c_K = hybrid ? pi2(c.L + c.D + c.H, c.LT + c.R + c.HT)
                     : c.L + c.D + c.LT + c.H + c.HT + c.R;
      switch (variant.preconditioner) {
        case PreconditionerType::M: b.c_P = hybrid ? pi2(c_S, c.Rinv) : c_S + c.Rinv; break;
        case PreconditionerType::B: b.c_P = c.Dinv + c.Rinv + c_S; break;
        case PreconditionerType::T: b.c_P = c_S + c.Rinv + c.H + c.Dinv + c.Ltilde; break;
        default: b.c_P = 0.0; break;
      }
      b.total = no * (b.c_J + b.c_P) + ni * (b.c_K + b.c_P) + nq * b.c_q;
      break;
    }
    case Formulation::state: {
      b.c_K = hybrid ? pi2(c.L + c.Dinv + c.LT, c.H + c.Rinv + c.HT)
                     : c.L + c.Dinv + c.LT + c.H + c.Rinv + c.HT;
      b.c_rhs = hybrid ? pi2(c.LT, c.HT) : c.LT + c.HT;
      b.c_P = precond ? c_S : 0.0;
      b.total = no * (b.c_J + b.c_rhs + b.c_P) + ni * (b.c_K + b.c_P);
      break;
    }
    case Formulation::forcing: {
      // The hybrid setting leaves the forcing formulation unchanged.
      b.c_J = c.M + c.calH + c.LT + c.Dinv + c.HT + c.Rinv;
      b.c_rhs = c.LinvT + c.HT;
      if (precond) {
        b.c_K = c.D + c.Linv + c.H + c.Rinv + c.HT + c.LinvT;
        b.c_P = c.D;
        b.total = no * (b.c_J + b.c_rhs + b.c_P) + ni * b.c_K;
      } else {
        // Unpreconditioned FOM on the forcing system: D^{-1} in every
        // product and a final back-solve dx = L^{-1} dp per outer iteration.
        b.c_K = c.Dinv + c.Linv + c.H + c.Rinv + c.HT + c.LinvT;
        b.total = no * (b.c_J + b.c_rhs + c.Linv) + ni * b.c_K;
      }
      break;
    }
  }
  return b;
}

double variant_cost(const RunTrace &trace, const VariantSpec &variant, const CostParams &params) {
  return variant_cost(variant, cost_inputs(trace), params).total;
}

}  // namespace wc4dvar
