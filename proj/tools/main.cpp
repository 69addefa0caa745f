// SPDX-License-Identifier: Apache-2.0
//
// wc4dvar: generate Burgers problems, run solver variants, apply the cost
// model and build best-method maps.

#include "wc4dvar/burgers.hpp"
#include "wc4dvar/costmodel.hpp"
#include "wc4dvar/experiments.hpp"
#include "wc4dvar/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace wc4dvar;

namespace {

struct RunArgs {
  std::string problem;
  std::uint64_t seed = BurgersConfig{}.seed;
  bool no_noise = false;
  std::vector<std::string> variants;
  int n_inner = GNControls{}.n_inner;
  int max_outer = GNControls{}.max_outer;
  int max_inner = GNControls{}.max_inner;
  double eps_q = GNControls{}.eps_q;
  double eps_r = GNControls{}.eps_r;
  int dinv_cg = 0;
  unsigned threads = 0;
  bool reference = true;
  std::string out_dir = "wc4dvar-out";
};

struct GridArgs {
  std::string results;
  std::vector<int> p;
  std::vector<double> c_dinv;
  std::vector<double> rho;
  std::vector<std::string> modes;
  bool scale_dinv = false;
  std::string out;
};

BurgersProblem make_problem(const RunArgs &a) {
  if (!a.problem.empty()) return load_problem_json(a.problem);
  BurgersConfig c;
  c.seed = a.seed;
  c.add_noise = !a.no_noise;
  return generate_problem(c);
}

std::vector<CostMode> parse_modes(const std::vector<std::string> &names) {
  std::vector<CostMode> modes;
  for (const auto &m : names) modes.push_back(parse_cost_mode(m));
  return modes;
}

std::ostream &open_or_stdout(const std::string &path, std::ofstream &file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

int cmd_generate(std::uint64_t seed, bool no_noise, const std::string &out) {
  BurgersConfig c;
  c.seed = seed;
  c.add_noise = !no_noise;
  const BurgersProblem p = generate_problem(c);
  write_problem_json(p, out);
  std::printf("J(first_guess) = %.6g  J(truth) = %.6g  -> %s\n",
              evaluate_J(p, p.first_guess()), evaluate_J(p, p.truth()), out.c_str());
  return 0;
}

int cmd_run(const RunArgs &a) {
  const BurgersProblem problem = make_problem(a);
  GNControls controls;
  controls.n_inner = a.n_inner;
  controls.max_outer = a.max_outer;
  controls.max_inner = a.max_inner;
  controls.eps_q = a.eps_q;
  controls.eps_r = a.eps_r;
  if (a.dinv_cg > 0) controls.dinv = InverseMode::cg(a.dinv_cg);
  controls.validate();

  ExperimentGrid grid;
  if (!a.variants.empty()) {
    grid.variants.clear();
    for (const auto &v : a.variants) grid.variants.push_back(VariantSpec::parse(v));
  }

  MatrixOptions opts;
  opts.threads = a.threads;
  opts.on_result = [](const VariantResult &r) {
    std::fprintf(stderr, "%-12s %-11s J=%-12.6g outer=%-3d inner=%-5d q=%-4d %.1fs %s\n",
                 r.trace.variant.c_str(), to_string(r.trace.status), r.trace.J_final,
                 r.trace.n_outer(), r.trace.total_inner(), r.trace.total_q_evaluations(),
                 r.seconds, r.trace.message.c_str());
  };
  const Vector &x0 = problem.first_guess();
  ResultsStore store = run_matrix(problem, x0, grid, controls, opts);
  if (a.reference) {
    const ReferenceOptimum ref = reference_optimum(problem, x0);
    store.J_star = ref.J;
    std::fprintf(stderr, "J* = %.10g (||g|| = %.3g, %d outer)\n", ref.J, ref.grad_norm,
                 ref.outer_iterations);
  }

  fs::create_directories(a.out_dir);
  const std::string problem_path = (fs::path(a.out_dir) / "problem.json").string();
  const std::string results_path = (fs::path(a.out_dir) / "results.json").string();
  const std::string trace_path = (fs::path(a.out_dir) / "trace.csv").string();
  write_problem_json(problem, problem_path);
  write_results_json(store, problem.config(), controls, results_path);
  write_trace_csv(store.results, trace_path);
  write_manifest((fs::path(a.out_dir) / "manifest.json").string(), problem.config(), controls,
                 {{"problem", problem_path}, {"results", results_path}, {"trace", trace_path}});
  std::printf("wrote %s\n", a.out_dir.c_str());
  return 0;
}

int cmd_cost(const GridArgs &a) {
  const ResultsStore store = read_results_json(a.results);
  std::vector<CostParams> params;
  for (CostMode mode : parse_modes(a.modes)) {
    for (int p : a.p) {
      for (double c : a.c_dinv) {
        CostParams cp;
        cp.p = p;
        cp.c_Dinv = c;
        cp.mode = mode;
        cp.scale_dinv_with_p = a.scale_dinv;
        params.push_back(cp);
      }
    }
  }
  std::ofstream file;
  write_cost_csv(store, params, open_or_stdout(a.out, file));
  return 0;
}

int cmd_map(const GridArgs &a) {
  const ResultsStore store = read_results_json(a.results);
  if (!std::isfinite(store.J_star)) {
    throw IoError("'" + a.results + "' has no reference optimum; rerun `run` with --reference");
  }
  ExperimentGrid grid;
  grid.variants.clear();
  for (const auto &r : store.results) grid.variants.push_back(r.variant);
  if (!a.p.empty()) grid.p = a.p;
  if (!a.c_dinv.empty()) grid.c_dinv = a.c_dinv;
  if (!a.rho.empty()) grid.rho = a.rho;
  if (!a.modes.empty()) grid.modes = parse_modes(a.modes);
  const auto cells = best_method_map(store, grid, store.J0, store.J_star, store.num_subwindows);
  std::ofstream file;
  write_map_csv(cells, open_or_stdout(a.out, file));
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Weak-constraint 4D-Var solver experiments"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  std::uint64_t gen_seed = BurgersConfig{}.seed;
  bool gen_no_noise = false;
  std::string gen_out = "problem.json";
  auto *gen = app.add_subcommand("generate", "Write the Burgers problem for a seed as JSON");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_flag("--no-noise", gen_no_noise, "Noise-free truth, observations and background");
  gen->add_option("-o,--out", gen_out, "Output path");

  RunArgs run;
  auto *r = app.add_subcommand("run", "Run one or more variants (all 36 by default)");
  r->add_option("--problem", run.problem, "Problem JSON (default: generate from --seed)");
  r->add_option("--seed", run.seed, "Random seed");
  r->add_flag("--no-noise", run.no_noise, "Noise-free problem");
  r->add_option("--variant", run.variants, "Variant name such as SAQ15-M-0 (repeatable)");
  r->add_option("--n-inner", run.n_inner, "Inner iteration budget / theta horizon");
  r->add_option("--max-outer", run.max_outer, "Outer iterations");
  r->add_option("--max-inner", run.max_inner, "Hard cap on inner iterations");
  r->add_option("--eps-q", run.eps_q, "Model decrease threshold");
  r->add_option("--eps-r", run.eps_r, "SAQ0 relative residual threshold");
  r->add_option("--dinv-cg", run.dinv_cg, "Apply D^-1 by k CG iterations (0: exact)");
  r->add_option("--threads", run.threads, "Worker threads (0: all cores)");
  r->add_flag("!--no-reference", run.reference, "Skip the reference optimum");
  r->add_option("-o,--out-dir", run.out_dir, "Output directory");

  GridArgs cost;
  cost.p = {1};
  cost.c_dinv = {0.5};
  cost.modes = {"fully_mpi"};
  auto *c = app.add_subcommand("cost", "Apply the cost model to stored traces");
  c->add_option("--results", cost.results, "results.json from `run`")->required();
  c->add_option("--p", cost.p, "Computing processes")->delimiter(',');
  c->add_option("--c-dinv", cost.c_dinv, "Cost of one D^-1 application")->delimiter(',');
  c->add_option("--mode", cost.modes, "sequential, fully_mpi or hybrid")->delimiter(',');
  c->add_flag("--scale-dinv", cost.scale_dinv, "Let the D^-1 cost shrink with p like D");
  c->add_option("-o,--out", cost.out, "Output CSV (default stdout)");

  GridArgs map;
  auto *m = app.add_subcommand("map", "Best-method map and minimum-cost surface");
  m->add_option("--results", map.results, "results.json from `run`")->required();
  m->add_option("--p", map.p, "Computing processes")->delimiter(',');
  m->add_option("--c-dinv", map.c_dinv, "D^-1 costs")->delimiter(',');
  m->add_option("--rho", map.rho, "Reliability factors in (0, 1)")->delimiter(',');
  m->add_option("--mode", map.modes, "sequential, fully_mpi or hybrid")->delimiter(',');
  m->add_option("-o,--out", map.out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(gen_seed, gen_no_noise, gen_out);
    if (*r) return cmd_run(run);
    if (*c) return cmd_cost(cost);
    if (*m) return cmd_map(map);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
