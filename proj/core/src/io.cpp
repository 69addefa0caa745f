// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef WC4DVAR_VERSION
#define WC4DVAR_VERSION "unknown"
#endif

namespace wc4dvar {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// NaN is written as null and read back as NaN.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num(const json &j) { return j.is_null() ? kNaN : j.get<double>(); }

json vec(const Vector &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

std::ofstream open_out(const std::string &path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  return f;
}

json read_json(const std::string &path, const char *schema) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception &e) {
    throw IoError("'" + path + "': " + e.what());
  }
  if (j.value("schema", std::string()) != schema) {
    throw IoError("'" + path + "': expected schema " + schema);
  }
  return j;
}

json config_json(const BurgersConfig &c) {
  return {{"n", c.n},
          {"dx", c.dx},
          {"dt", c.dt},
          {"nu", c.nu},
          {"T", c.T},
          {"num_subwindows", c.num_subwindows},
          {"steps_per_subwindow", c.steps_per_subwindow},
          {"k", c.k},
          {"obs_per_subwindow", c.obs_per_subwindow},
          {"sigma_m2", c.sigma_m2},
          {"sigma_o2", c.sigma_o2},
          {"sigma_b2", c.sigma_b2},
          {"B_length", c.B_length},
          {"B_alpha", c.B_alpha},
          {"Q_length", c.Q_length},
          {"Q_alpha", c.Q_alpha},
          {"kernel_width_factor", c.kernel_width_factor},
          {"R_min", c.R_min},
          {"R_max", c.R_max},
          {"forcing", c.forcing},
          {"add_noise", c.add_noise},
          {"seed", c.seed}};
}

BurgersConfig config_from_json(const json &j) {
  BurgersConfig c;
  j.at("n").get_to(c.n);
  j.at("dx").get_to(c.dx);
  j.at("dt").get_to(c.dt);
  j.at("nu").get_to(c.nu);
  j.at("T").get_to(c.T);
  j.at("num_subwindows").get_to(c.num_subwindows);
  j.at("steps_per_subwindow").get_to(c.steps_per_subwindow);
  j.at("k").get_to(c.k);
  j.at("obs_per_subwindow").get_to(c.obs_per_subwindow);
  j.at("sigma_m2").get_to(c.sigma_m2);
  j.at("sigma_o2").get_to(c.sigma_o2);
  j.at("sigma_b2").get_to(c.sigma_b2);
  j.at("B_length").get_to(c.B_length);
  j.at("B_alpha").get_to(c.B_alpha);
  j.at("Q_length").get_to(c.Q_length);
  j.at("Q_alpha").get_to(c.Q_alpha);
  j.at("kernel_width_factor").get_to(c.kernel_width_factor);
  j.at("R_min").get_to(c.R_min);
  j.at("R_max").get_to(c.R_max);
  j.at("forcing").get_to(c.forcing);
  j.at("add_noise").get_to(c.add_noise);
  j.at("seed").get_to(c.seed);
  c.validate();
  return c;
}

json controls_json(const GNControls &c) {
  return {{"max_outer", c.max_outer},
          {"n_inner", c.n_inner},
          {"eps_r", c.eps_r},
          {"eps_q", c.eps_q},
          {"max_inner", c.max_inner},
          {"full_accuracy_tolerance", c.full_accuracy_tolerance},
          {"full_accuracy_inner", c.full_accuracy_inner},
          {"dinv", c.dinv.kind == InverseMode::Kind::exact
                       ? std::string("exact")
                       : "cg(" + std::to_string(c.dinv.iterations) + ")"},
          {"gradient_tolerance", c.gradient_tolerance},
          {"linesearch",
           {{"sufficient_decrease", c.linesearch.sufficient_decrease},
            {"shrink", c.linesearch.shrink},
            {"max_backtracks", c.linesearch.max_backtracks}}}};
}

#define WC4DVAR_COUNT_FIELDS(X) \
  X(model) X(obs_nonlinear) X(L) X(LT) X(L_inv) X(L_invT) X(Ltilde_inv) X(Ltilde_invT) \
  X(D) X(D_inv) X(R) X(R_inv) X(H) X(HT)

json counts_json(const OpCounts &c) {
  json j;
#define X(f) j[#f] = c.f;
  WC4DVAR_COUNT_FIELDS(X)
#undef X
  return j;
}

OpCounts counts_from_json(const json &j) {
  OpCounts c;
#define X(f) c.f = j.value(#f, std::int64_t{0});
  WC4DVAR_COUNT_FIELDS(X)
#undef X
  return c;
}

TerminationReason parse_reason(const std::string &s) {
  for (auto r : {TerminationReason::none, TerminationReason::tolerance,
                 TerminationReason::quadratic_decrease, TerminationReason::full_accuracy,
                 TerminationReason::iteration_cap}) {
    if (s == to_string(r)) return r;
  }
  throw IoError("unknown termination reason '" + s + "'");
}

RunStatus parse_status(const std::string &s) {
  for (auto r : {RunStatus::completed, RunStatus::converged, RunStatus::stagnated,
                 RunStatus::non_descent, RunStatus::failed}) {
    if (s == to_string(r)) return r;
  }
  throw IoError("unknown run status '" + s + "'");
}

json outer_json(const OuterRecord &o) {
  return {{"outer", o.outer},
          {"J", num(o.J)},
          {"grad_norm", num(o.grad_norm)},
          {"q0", num(o.q0)},
          {"q_final", num(o.q_final)},
          {"step_norm", num(o.step_norm)},
          {"gtdx", num(o.gtdx)},
          {"alpha", num(o.alpha)},
          {"J_next", num(o.J_next)},
          {"inner_iterations", o.inner_iterations},
          {"q_evaluations", o.q_evaluations},
          {"linesearch_evaluations", o.linesearch_evaluations},
          {"inner_reason", to_string(o.inner_reason)},
          {"kappa1", num(o.kappa1)},
          {"kappa2", num(o.kappa2)},
          {"q_consistency", num(o.q_consistency)},
          {"grad_consistency", num(o.grad_consistency)},
          {"counts", counts_json(o.counts)}};
}

OuterRecord outer_from_json(const json &j) {
  OuterRecord o;
  j.at("outer").get_to(o.outer);
  o.J = num(j.at("J"));
  o.grad_norm = num(j.at("grad_norm"));
  o.q0 = num(j.at("q0"));
  o.q_final = num(j.at("q_final"));
  o.step_norm = num(j.at("step_norm"));
  o.gtdx = num(j.at("gtdx"));
  o.alpha = num(j.at("alpha"));
  o.J_next = num(j.at("J_next"));
  j.at("inner_iterations").get_to(o.inner_iterations);
  j.at("q_evaluations").get_to(o.q_evaluations);
  j.at("linesearch_evaluations").get_to(o.linesearch_evaluations);
  o.inner_reason = parse_reason(j.at("inner_reason").get<std::string>());
  o.kappa1 = num(j.at("kappa1"));
  o.kappa2 = num(j.at("kappa2"));
  o.q_consistency = num(j.at("q_consistency"));
  o.grad_consistency = num(j.at("grad_consistency"));
  o.counts = counts_from_json(j.at("counts"));
  return o;
}

void write_counts_header(std::ostream &out) {
#define X(f) out << "," #f;
  WC4DVAR_COUNT_FIELDS(X)
#undef X
}

void write_counts_row(std::ostream &out, const OpCounts *c) {
#define X(f) \
  out << ',';    \
  if (c) out << c->f;
  WC4DVAR_COUNT_FIELDS(X)
#undef X
}

void csv_num(std::ostream &out, double v) {
  if (std::isfinite(v)) out << v;
}

}  // namespace

const char *library_version() { return WC4DVAR_VERSION; }

std::string digest(const Vector &v) {
  std::uint64_t h = 14695981039346656037ull;
  for (Index i = 0; i < v.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v[i], sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

void write_problem_json(const BurgersProblem &problem, const std::string &path) {
  const auto &H = problem.observation_operator();
  json indices = json::array();
  for (Index j = 0; j <= problem.num_subwindows(); ++j) indices.push_back(H.indices(j));
  json j = {{"schema", kProblemSchema},
            {"version", library_version()},
            {"config", config_json(problem.config())},
            {"background", vec(problem.background())},
            {"observations", vec(problem.observations())},
            {"observed_indices", indices},
            {"truth", vec(problem.truth())},
            {"first_guess", vec(problem.first_guess())},
            {"digests",
             {{"background", digest(problem.background())},
              {"observations", digest(problem.observations())},
              {"truth", digest(problem.truth())},
              {"first_guess", digest(problem.first_guess())}}}};
  auto f = open_out(path);
  f << j.dump(1) << '\n';
}

BurgersProblem load_problem_json(const std::string &path) {
  const json j = read_json(path, kProblemSchema);
  BurgersProblem p = generate_problem(config_from_json(j.at("config")));
  const json &d = j.at("digests");
  auto check = [&](const char *key, const Vector &v) {
    if (d.at(key).get<std::string>() != digest(v)) {
      throw IoError("'" + path + "': " + key +
                    " does not match the regenerated problem (different build or platform)");
    }
  };
  check("background", p.background());
  check("observations", p.observations());
  check("truth", p.truth());
  check("first_guess", p.first_guess());
  return p;
}

void write_trace_csv(const std::vector<VariantResult> &results, std::ostream &out) {
  out << std::setprecision(17);
  out << "# schema: " << kTraceSchema << '\n';
  out << "variant,kind,outer,inner,J,q_st,residual_norm";
  write_counts_header(out);
  out << '\n';
  for (const auto &r : results) {
    const RunTrace &t = r.trace;
    std::size_t next_inner = 0;
    for (const auto &o : t.outer) {
      for (; next_inner < t.inner.size() && t.inner[next_inner].outer == o.outer; ++next_inner) {
        const InnerRecord &ir = t.inner[next_inner];
        out << t.variant << ",inner," << ir.outer << ',' << ir.inner << ',';
        csv_num(out, ir.J);
        out << ',';
        csv_num(out, ir.q_st);
        out << ',';
        csv_num(out, ir.residual_norm);
        write_counts_row(out, nullptr);
        out << '\n';
      }
      out << t.variant << ",outer," << o.outer << ',' << o.inner_iterations << ',';
      csv_num(out, o.J);
      out << ',';
      csv_num(out, o.q_final);
      out << ',';
      write_counts_row(out, &o.counts);
      out << '\n';
    }
  }
}

void write_trace_csv(const std::vector<VariantResult> &results, const std::string &path) {
  auto f = open_out(path);
  write_trace_csv(results, f);
}

void write_results_json(const ResultsStore &store, const BurgersConfig &config,
                        const GNControls &controls, const std::string &path) {
  json runs = json::array();
  for (const auto &r : store.results) {
    json outer = json::array();
    for (const auto &o : r.trace.outer) outer.push_back(outer_json(o));
    runs.push_back({{"variant", r.variant.name()},
                    {"status", to_string(r.trace.status)},
                    {"message", r.trace.message},
                    {"J_initial", num(r.trace.J_initial)},
                    {"J_final", num(r.trace.J_final)},
                    {"n_outer", r.trace.n_outer()},
                    {"n_inner", r.trace.total_inner()},
                    {"n_q", r.trace.total_q_evaluations()},
                    {"seconds", r.seconds},
                    {"outer", outer}});
  }
  json j = {{"schema", kResultsSchema},
            {"version", library_version()},
            {"config", config_json(config)},
            {"controls", controls_json(controls)},
            {"J0", num(store.J0)},
            {"J_star", num(store.J_star)},
            {"num_subwindows", store.num_subwindows},
            {"runs", runs}};
  auto f = open_out(path);
  f << j.dump(1) << '\n';
}

ResultsStore read_results_json(const std::string &path) {
  const json j = read_json(path, kResultsSchema);
  ResultsStore s;
  try {
    s.J0 = num(j.at("J0"));
    s.J_star = num(j.at("J_star"));
    j.at("num_subwindows").get_to(s.num_subwindows);
    for (const auto &r : j.at("runs")) {
      VariantResult v;
      v.variant = VariantSpec::parse(r.at("variant").get<std::string>());
      v.trace.variant = v.variant.name();
      v.trace.status = parse_status(r.at("status").get<std::string>());
      v.trace.message = r.value("message", std::string());
      v.trace.J_initial = num(r.at("J_initial"));
      v.trace.J_final = num(r.at("J_final"));
      v.seconds = r.value("seconds", 0.0);
      for (const auto &o : r.at("outer")) v.trace.outer.push_back(outer_from_json(o));
      s.results.push_back(std::move(v));
    }
  } catch (const json::exception &e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return s;
}

void write_cost_csv(const ResultsStore &store, const std::vector<CostParams> &params,
                    std::ostream &out) {
  out << std::setprecision(17);
  out << "# schema: " << kCostSchema << '\n';
  out << "variant,status,p,c_dinv,mode,n_outer,n_inner,n_q,c_q,c_J,c_K,c_P,c_rhs,total\n";
  for (const auto &cp : params) {
    for (const auto &r : store.results) {
      const CostInputs in = cost_inputs(r.trace);
      const CostBreakdown b = variant_cost(r.variant, in, cp);
      out << r.variant.name() << ',' << to_string(r.trace.status) << ',' << cp.p << ','
          << cp.c_Dinv << ',' << to_string(cp.mode) << ',' << in.n_outer << ',' << in.n_inner
          << ',' << in.n_q << ',' << b.c_q << ',' << b.c_J << ',' << b.c_K << ',' << b.c_P << ','
          << b.c_rhs << ',' << b.total << '\n';
    }
  }
}

void write_map_csv(const std::vector<MapCell> &cells, std::ostream &out) {
  out << std::setprecision(17);
  out << "# schema: " << kMapSchema << '\n';
  out << "c_dinv,rho,p,mode,winner,min_cost,n_passed\n";
  for (const auto &c : cells) {
    out << c.c_dinv << ',' << c.rho << ',' << c.p << ',' << to_string(c.mode) << ','
        << (c.winner.empty() ? "none" : c.winner) << ',';
    csv_num(out, c.min_cost);
    out << ',' << c.passed.size() << '\n';
  }
}

void write_map_csv(const std::vector<MapCell> &cells, const std::string &path) {
  auto f = open_out(path);
  write_map_csv(cells, f);
}

void write_manifest(const std::string &path, const BurgersConfig &config,
                    const GNControls &controls, const std::vector<ManifestEntry> &files) {
  json list = json::array();
  for (const auto &e : files) list.push_back({{"kind", e.kind}, {"path", e.path}});
  json j = {{"schema", kManifestSchema},
            {"config", config_json(config)},
            {"seed", config.seed},
            {"controls", controls_json(controls)},
            {"versions",
             {{"wc4dvar", library_version()},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__},
              {"cxx_standard", __cplusplus}}},
            {"files", list}};
  auto f = open_out(path);
  f << j.dump(1) << '\n';
}

}  // namespace wc4dvar
