// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/experiments.hpp"
#include "wc4dvar/io.hpp"

#include "support/small_problem.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wc4dvar;
using namespace wc4dvar::testing;

namespace {

VariantResult fake_result(const std::string &name, double J_final, int n_outer, int inner_each,
                          RunStatus status = RunStatus::completed) {
  VariantResult r;
  r.variant = VariantSpec::parse(name);
  r.trace.variant = name;
  r.trace.status = status;
  r.trace.J_initial = 100.0;
  r.trace.J_final = J_final;
  for (int k = 0; k < n_outer; ++k) {
    OuterRecord o;
    o.outer = k;
    o.inner_iterations = inner_each;
    o.q_evaluations = r.variant.formulation == Formulation::saddle ? inner_each : 0;
    r.trace.outer.push_back(o);
  }
  return r;
}

ResultsStore fake_store() {
  ResultsStore s;
  s.J0 = 100.0;
  s.J_star = 0.0;
  s.num_subwindows = 50;
  s.results = {fake_result("SAQ1-M-0", 1.0, 3, 20), fake_result("STQ1-S-0", 0.5, 5, 40),
               fake_result("FOQ1-D", 0.8, 2, 10),
               fake_result("SAQ1-n", 0.0, 1, 1, RunStatus::failed)};
  return s;
}

std::filesystem::path temp_dir(const std::string &name) {
  auto d = std::filesystem::temp_directory_path() / ("wc4dvar_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("log_spaced") {
  const auto v = log_spaced(1e-3, 1e-1, 9);
  REQUIRE(v.size() == 9);
  CHECK(v.front() == 1e-3);
  CHECK(v.back() == 1e-1);
  CHECK(v[4] == doctest::Approx(1e-2).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(std::pow(10.0, -2.75)).epsilon(1e-14));
  CHECK(log_spaced(2.0, 5.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), ParameterError);
}

TEST_CASE("default experiment grid") {
  const ExperimentGrid g;
  CHECK(g.c_dinv == std::vector<double>{0.5, 1.0, 2.0, 5.0, 10.0});
  CHECK(g.rho.size() == 9);
  CHECK(g.p == std::vector<int>{1, 15, 25, 50});
  CHECK(g.variants.size() == 36);
  ExperimentGrid bad;
  bad.rho = {1.0};
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("accuracy filter") {
  RunTrace t;
  t.J_final = 10.0;
  CHECK(passes_filter(t, 100.0, 0.0, 0.1));
  CHECK_FALSE(passes_filter(t, 100.0, 0.0, 0.099));
  CHECK(passes_filter(t, 100.0, 10.0, 1e-3));
  t.status = RunStatus::failed;
  CHECK_FALSE(passes_filter(t, 100.0, 0.0, 0.5));
  t.status = RunStatus::completed;
  t.J_final = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(passes_filter(t, 100.0, 0.0, 0.5));
}

TEST_CASE("best-method map on a hand-built store") {
  const ResultsStore s = fake_store();
  ExperimentGrid g;
  g.rho = {1e-3, 6e-3, 1e-2, 1e-1};
  const auto cells = best_method_map(s, g, s.J0, s.J_star, s.num_subwindows);
  REQUIRE(cells.size() == g.modes.size() * g.p.size() * g.c_dinv.size() * g.rho.size());

  // nesting order mode -> p -> c_dinv -> rho
  CHECK(cells[0].p == 1);
  CHECK(cells[0].c_dinv == 0.5);
  CHECK(cells[0].rho == 1e-3);
  CHECK(cells[1].rho == 6e-3);
  CHECK(cells[4].c_dinv == 1.0);

  for (const auto &c : cells) {
    CAPTURE(c.p);
    CAPTURE(c.c_dinv);
    CAPTURE(c.rho);
    if (c.rho == 1e-3) {
      CHECK(c.winner.empty());
      CHECK(std::isnan(c.min_cost));
      continue;
    }
    // Brute-force argmin over the runs that pass.
    CostParams params;
    params.p = c.p;
    params.c_Dinv = c.c_dinv;
    params.mode = c.mode;
    std::string best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t n_pass = 0;
    for (const auto &r : s.results) {
      if (r.trace.status == RunStatus::failed) continue;
      if (r.trace.J_final > c.rho * 100.0) continue;
      ++n_pass;
      const double cost = variant_cost(r.trace, r.variant, params);
      if (cost < best_cost) {
        best_cost = cost;
        best = r.trace.variant;
      }
    }
    CHECK(c.passed.size() == n_pass);
    CHECK(c.winner == best);
    CHECK(c.min_cost == doctest::Approx(best_cost));
  }
  // Only STQ1-S-0 reaches rho = 6e-3.
  CHECK(cells[1].winner == "STQ1-S-0");
  CHECK(cells[1].passed == std::vector<std::string>{"STQ1-S-0"});
}

TEST_CASE("map properties") {
  const ResultsStore s = fake_store();
  ExperimentGrid g;
  const auto cells = best_method_map(s, g, s.J0, s.J_star, s.num_subwindows);

  // Shrinking rho can only remove candidates, so min cost never decreases.
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    if (cells[i].p != cells[i + 1].p || cells[i].c_dinv != cells[i + 1].c_dinv) continue;
    CHECK(cells[i].passed.size() <= cells[i + 1].passed.size());
    if (!cells[i].winner.empty()) CHECK(cells[i].min_cost >= cells[i + 1].min_cost - 1e-12);
  }
  // Min cost is non-increasing in p at fixed c_dinv and rho.
  const std::size_t nr = g.rho.size(), nc = g.c_dinv.size();
  for (std::size_t ip = 0; ip + 1 < g.p.size(); ++ip) {
    for (std::size_t i = 0; i < nr * nc; ++i) {
      const auto &a = cells[ip * nr * nc + i];
      const auto &b = cells[(ip + 1) * nr * nc + i];
      if (a.winner.empty()) continue;
      CHECK(b.min_cost <= a.min_cost + 1e-12);
    }
  }
  // Reordering the store does not change any winner.
  ResultsStore r = s;
  std::reverse(r.results.begin(), r.results.end());
  const auto cells2 = best_method_map(r, g, s.J0, s.J_star, s.num_subwindows);
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(cells[i].winner == cells2[i].winner);

  CHECK_THROWS_AS(best_method_map(s, g, s.J0, std::numeric_limits<double>::quiet_NaN(), 50),
                  ParameterError);
}

TEST_CASE("ties go to the smaller name") {
  ResultsStore s;
  s.J0 = 100.0;
  s.J_star = 0.0;
  s.num_subwindows = 50;
  s.results = {fake_result("SAQ25-M-0", 0.0, 2, 10), fake_result("SAQ15-M-0", 0.0, 2, 10)};
  ExperimentGrid g;
  g.p = {1};
  g.c_dinv = {1.0};
  g.rho = {0.5};
  const auto cells = best_method_map(s, g, 100.0, 0.0, 50);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].winner == "SAQ15-M-0");
}

TEST_CASE("reference optimum of a consistent problem is zero") {
  SmallProblem p(4, 3, 41, 0.1);
  std::mt19937_64 gen(3);
  const Vector truth = p.make_consistent(random_vector(gen, 4));
  const auto ref = reference_optimum(p, truth + 0.05 * random_vector(gen, truth.size()));
  CHECK(ref.J <= 1e-16);
  CHECK((ref.x - truth).norm() <= 1e-6);
  CHECK_THROWS_AS(reference_optimum(p, truth, 0), ParameterError);
}

TEST_CASE("run_matrix matches direct runs") {
  const SmallProblem p(4, 3, 43, 0.2);
  std::mt19937_64 gen(10);
  const Vector x0 = random_vector(gen, p.state_layout().total());
  ExperimentGrid g;
  g.variants = {VariantSpec::parse("SAQ1-M-0"), VariantSpec::parse("STQ1-S-M"),
                VariantSpec::parse("FOQ15-D")};
  GNControls c;
  c.max_outer = 4;
  int callbacks = 0;
  MatrixOptions opt;
  opt.threads = 3;
  opt.on_result = [&](const VariantResult &) { ++callbacks; };
  const ResultsStore s = run_matrix(p, x0, g, c, opt);
  CHECK(callbacks == 3);
  CHECK(s.num_subwindows == 3);
  CHECK(s.J0 == doctest::Approx(evaluate_J(p, x0)).epsilon(1e-15));
  REQUIRE(s.results.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const RunTrace t = run_variant(p, x0, g.variants[i], c);
    CHECK(s.results[i].trace.variant == t.variant);
    CHECK(s.results[i].trace.J_final == t.J_final);
    CHECK(s.results[i].trace.total_inner() == t.total_inner());
  }
  CHECK(s.find("STQ1-S-M") == &s.results[1]);
  CHECK(s.find("SAQ1-n") == nullptr);
}

TEST_CASE("results JSON round trip") {
  const auto dir = temp_dir("results");
  ResultsStore s = fake_store();
  s.results[0].trace.outer[1].q_final = std::numeric_limits<double>::quiet_NaN();
  s.results[0].trace.outer[1].counts.L = 7;
  s.results[0].seconds = 1.5;
  const auto path = (dir / "results.json").string();
  write_results_json(s, BurgersConfig{}, GNControls{}, path);
  const ResultsStore r = read_results_json(path);
  CHECK(r.J0 == s.J0);
  CHECK(r.J_star == s.J_star);
  CHECK(r.num_subwindows == 50);
  REQUIRE(r.results.size() == s.results.size());
  for (std::size_t i = 0; i < s.results.size(); ++i) {
    const auto &a = s.results[i];
    const auto &b = r.results[i];
    CHECK(b.variant == a.variant);
    CHECK(b.trace.status == a.trace.status);
    CHECK(b.trace.J_final == a.trace.J_final);
    CHECK(b.trace.total_inner() == a.trace.total_inner());
    CHECK(b.trace.total_q_evaluations() == a.trace.total_q_evaluations());
  }
  CHECK(std::isnan(r.results[0].trace.outer[1].q_final));
  CHECK(r.results[0].trace.outer[1].counts.L == 7);
  CHECK(r.results[0].seconds == 1.5);

  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("schema") == kResultsSchema);
}

TEST_CASE("trace and map CSV layout") {
  const ResultsStore s = fake_store();
  std::ostringstream os;
  write_trace_csv(s.results, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == std::string("# schema: ") + kTraceSchema);
  std::getline(is, line);
  CHECK(line.rfind("variant,kind,outer,inner,J,q_st,residual_norm", 0) == 0);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3 + 5 + 2 + 1);

  ExperimentGrid g;
  g.p = {1};
  g.c_dinv = {0.5};
  g.rho = {1e-3, 1e-1};
  std::ostringstream ms;
  write_map_csv(best_method_map(s, g, 100.0, 0.0, 50), ms);
  std::istringstream mi(ms.str());
  std::getline(mi, line);
  CHECK(line == std::string("# schema: ") + kMapSchema);
  std::getline(mi, line);
  CHECK(line == "c_dinv,rho,p,mode,winner,min_cost,n_passed");
  std::getline(mi, line);
  CHECK(line.find(",none,") != std::string::npos);
}

TEST_CASE("problem JSON round trip and tamper detection") {
  const auto dir = temp_dir("problem");
  const auto path = (dir / "problem.json").string();
  BurgersConfig c;
  c.seed = 7;
  const BurgersProblem p = generate_problem(c);
  write_problem_json(p, path);
  const BurgersProblem q = load_problem_json(path);
  CHECK(q.config().seed == 7);
  CHECK(digest(q.observations()) == digest(p.observations()));
  CHECK(q.first_guess() == p.first_guess());

  std::ifstream in(path);
  auto j = nlohmann::json::parse(in);
  in.close();
  j["config"]["seed"] = 8;
  std::ofstream(path) << j.dump();
  CHECK_THROWS_AS(load_problem_json(path), IoError);

  j["schema"] = "wc4dvar.problem/99";
  std::ofstream(path) << j.dump();
  CHECK_THROWS_AS(load_problem_json(path), IoError);
}

TEST_CASE("digest") {
  Vector a = Vector::Zero(3);
  Vector b = a;
  b[2] = 1e-300;
  CHECK(digest(a).size() == 16);
  CHECK(digest(a) == digest(Vector::Zero(3)));
  CHECK(digest(a) != digest(b));
}
