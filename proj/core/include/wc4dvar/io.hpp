// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/burgers.hpp"
#include "wc4dvar/costmodel.hpp"
#include "wc4dvar/experiments.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace wc4dvar {

const char *library_version();

/// Schema tags written into every output file.
inline constexpr const char *kProblemSchema = "wc4dvar.problem/1";
inline constexpr const char *kResultsSchema = "wc4dvar.results/1";
inline constexpr const char *kTraceSchema = "wc4dvar.trace/1";
inline constexpr const char *kMapSchema = "wc4dvar.map/1";
inline constexpr const char *kCostSchema = "wc4dvar.cost/1";
inline constexpr const char *kManifestSchema = "wc4dvar.manifest/1";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a over the IEEE bytes of v, as 16 hex digits.
std::string digest(const Vector &v);

/// Config plus background, observations, observed indices, truth and first
/// guess, each with its digest.
void write_problem_json(const BurgersProblem &problem, const std::string &path);

/// Regenerates the problem from the stored config and checks the stored
/// digests against it. Throws IoError on schema or digest mismatch.
BurgersProblem load_problem_json(const std::string &path);

/// CSV with a leading "# schema: ..." line. One "outer" row per outer
/// iteration (J = J(x_k), q_st = q_st(dx_k), op counts of that iteration)
/// and one "inner" row per inner iteration (op-count columns empty).
void write_trace_csv(const std::vector<VariantResult> &results, std::ostream &out);
void write_trace_csv(const std::vector<VariantResult> &results, const std::string &path);

/// Summary and outer records of every run; inner records go to the trace CSV.
void write_results_json(const ResultsStore &store, const BurgersConfig &config,
                        const GNControls &controls, const std::string &path);
ResultsStore read_results_json(const std::string &path);

/// Per-variant cost breakdown for each parameter set.
void write_cost_csv(const ResultsStore &store, const std::vector<CostParams> &params,
                    std::ostream &out);

/// Columns c_dinv, rho, p, mode, winner, min_cost, n_passed.
void write_map_csv(const std::vector<MapCell> &cells, std::ostream &out);
void write_map_csv(const std::vector<MapCell> &cells, const std::string &path);

struct ManifestEntry {
  std::string kind;  // problem, results, trace, map, cost
  std::string path;
};

void write_manifest(const std::string &path, const BurgersConfig &config,
                    const GNControls &controls, const std::vector<ManifestEntry> &files);

}  // namespace wc4dvar
