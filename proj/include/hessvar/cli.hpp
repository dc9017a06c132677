#ifndef HESSVAR_CLI_HPP
#define HESSVAR_CLI_HPP

// Command-line front end. tools/hessvar.cpp only calls cli::run.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hessvar/hessvar.hpp"

namespace hessvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Run configuration

struct GridSpec {
  int N = 1024;
  double gamma = 0.0;  // 0 selects the default grading
  double beta = 1.0;
  bool operator==(const GridSpec&) const = default;
};

struct Tolerances {
  double flow = 1e-8;
  double shoot = 1e-12;
  double eigen = 1e-8;  // the residual floor grows like N^2
  bool operator==(const Tolerances&) const = default;
};

struct NlSpec {
  std::string kind = "constant";  // constant, power, eigen, mollified, capped
  double c = 1.0;
  double p = 1.5;
  double coef = 1.0;
  std::optional<double> sigma;  // weight exponent; absent means 2sk
  double lambda = 1.0;
  double delta = 0.1;
  double eps = 0.05;
  double M = 10.0;
  double m = 100.0;
  bool operator==(const NlSpec&) const = default;
};

struct ExtremalOptions {
  double lambda = 1.0;
  int perturbations = 20;
  double amplitude = 0.1;
  bool operator==(const ExtremalOptions&) const = default;
};

struct NonexistOptions {
  std::vector<double> deltas{1e-2, 1e-3, 1e-4};
  double eta = 0.5;
  bool operator==(const NonexistOptions&) const = default;
};

struct RunConfig {
  ProblemParams params;
  GridSpec grid;
  Tolerances tol;
  NlSpec nl;
  std::string profile = "quadratic";  // quotient: quadratic or extremal
  ExtremalOptions extremal;
  NonexistOptions nonexist;
  std::uint64_t seed = 0;
  std::string output_dir;

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    params.validate();
    if (grid.N < 16) throw InvalidInput("grid.N must be >= 16");
    if (!(grid.gamma == 0.0 || grid.gamma >= 1.0)) throw InvalidInput("grid.gamma must be 0 or >= 1");
    if (!(grid.beta >= 1.0)) throw InvalidInput("grid.beta must be >= 1");
    if (!(tol.flow > 0.0 && tol.shoot > 0.0 && tol.eigen > 0.0)) throw InvalidInput("tolerances must be > 0");
    static const std::set<std::string> kinds{"constant", "power", "eigen", "mollified", "capped"};
    if (!kinds.count(nl.kind)) throw InvalidInput("nl.kind must be one of constant, power, eigen, mollified, capped");
    if (profile != "quadratic" && profile != "extremal") throw InvalidInput("profile must be quadratic or extremal");
    if (extremal.perturbations < 0) throw InvalidInput("extremal.perturbations must be >= 0");
    if (nonexist.deltas.size() < 2) throw InvalidInput("nonexist.deltas needs at least two values");
  }
};

namespace detail {

// Strict object reader: unknown keys and wrong types are config errors.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidInput(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidInput(where_ + "." + key + ": wrong type");
    }
  }

  void get_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    if (!j_.at(key).is_number()) throw InvalidInput(where_ + "." + key + ": wrong type");
    out = j_.at(key).get<double>();
  }

  const json& sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return j_.contains(key) ? j_.at(key) : empty;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw InvalidInput(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["params"] = {{"n", c.params.n},
                 {"k", c.params.k},
                 {"s", c.params.s},
                 {"R", c.params.R},
                 {"borderline_exponent", c.params.borderline_exponent}};
  j["grid"] = {{"N", c.grid.N}, {"gamma", c.grid.gamma}, {"beta", c.grid.beta}};
  j["tolerances"] = {{"flow", c.tol.flow}, {"shoot", c.tol.shoot}, {"eigen", c.tol.eigen}};
  j["nl"] = {{"kind", c.nl.kind}, {"c", c.nl.c},         {"p", c.nl.p},         {"coef", c.nl.coef},
             {"sigma", nullptr},  {"lambda", c.nl.lambda}, {"delta", c.nl.delta}, {"eps", c.nl.eps},
             {"M", c.nl.M},       {"m", c.nl.m}};
  if (c.nl.sigma) j["nl"]["sigma"] = *c.nl.sigma;
  j["profile"] = c.profile;
  j["extremal"] = {{"lambda", c.extremal.lambda},
                   {"perturbations", c.extremal.perturbations},
                   {"amplitude", c.extremal.amplitude}};
  j["nonexist"] = {{"deltas", c.nonexist.deltas}, {"eta", c.nonexist.eta}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  detail::Reader top(j, "config");
  {
    detail::Reader r(top.sub("params"), "params");
    r.get("n", c.params.n);
    r.get("k", c.params.k);
    r.get("s", c.params.s);
    r.get("R", c.params.R);
    r.get("borderline_exponent", c.params.borderline_exponent);
    r.finish();
  }
  {
    detail::Reader r(top.sub("grid"), "grid");
    r.get("N", c.grid.N);
    r.get("gamma", c.grid.gamma);
    r.get("beta", c.grid.beta);
    r.finish();
  }
  {
    detail::Reader r(top.sub("tolerances"), "tolerances");
    r.get("flow", c.tol.flow);
    r.get("shoot", c.tol.shoot);
    r.get("eigen", c.tol.eigen);
    r.finish();
  }
  {
    detail::Reader r(top.sub("nl"), "nl");
    r.get("kind", c.nl.kind);
    r.get("c", c.nl.c);
    r.get("p", c.nl.p);
    r.get("coef", c.nl.coef);
    r.get_optional("sigma", c.nl.sigma);
    r.get("lambda", c.nl.lambda);
    r.get("delta", c.nl.delta);
    r.get("eps", c.nl.eps);
    r.get("M", c.nl.M);
    r.get("m", c.nl.m);
    r.finish();
  }
  top.get("profile", c.profile);
  {
    detail::Reader r(top.sub("extremal"), "extremal");
    r.get("lambda", c.extremal.lambda);
    r.get("perturbations", c.extremal.perturbations);
    r.get("amplitude", c.extremal.amplitude);
    r.finish();
  }
  {
    detail::Reader r(top.sub("nonexist"), "nonexist");
    r.get("deltas", c.nonexist.deltas);
    r.get("eta", c.nonexist.eta);
    r.finish();
  }
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.finish();
  c.validate();
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

inline Nonlinearity build_nl(const RunConfig& c) {
  const auto& s = c.nl;
  const double sigma = s.sigma.value_or(2.0 * c.params.s * c.params.k);
  if (s.kind == "constant") {
    auto nl = constant_nl(s.c);
    nl.weight.sigma = s.sigma.value_or(0.0);
    return nl;
  }
  if (s.kind == "power") return power_nl(s.p, sigma, s.coef);
  if (s.kind == "eigen") return eigen_nl(c.params, s.lambda);
  if (s.kind == "mollified") return mollified_nl(c.params, s.delta, s.eps, s.M);
  if (s.kind == "capped") return capped_nl(power_nl(s.p, sigma, s.coef), s.m, s.p);
  throw InvalidInput("unknown nl.kind " + s.kind);
}

inline std::shared_ptr<const RadialGrid> build_grid(const RunConfig& c) {
  return make_grid(c.params, c.grid.N, c.grid.gamma > 0.0 ? c.grid.gamma : default_grading(c.params), c.grid.beta);
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One output directory: CSVs, optional plot script, and the manifest.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& path() const { return dir_; }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns) {
    std::string text;
    for (std::size_t j = 0; j < header.size(); ++j) text += (j ? "," : "") + header[j];
    text += '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < columns.size(); ++j) text += (j ? "," : "") + fmt(columns[j][i]);
      text += '\n';
    }
    text_file(name, text);
    csvs_.push_back(name);
  }

  void text_file(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw NumericalFailure("cannot write " + (dir_ / name).string());
    out << text;
    files_.push_back(name);
  }

  void subdir(const std::string& name) { files_.push_back(name + "/manifest.json"); }

  void plotscript() {
    std::string s =
        "# Plot every CSV written by this run: first column against the rest.\n"
        "import csv\nimport matplotlib.pyplot as plt\n\nFILES = [\n";
    for (const auto& f : csvs_) s += "    \"" + f + "\",\n";
    s += "]\n\nfor name in FILES:\n"
         "    with open(name) as fh:\n"
         "        rows = list(csv.reader(fh))\n"
         "    head, data = rows[0], [[float(x) for x in r] for r in rows[1:]]\n"
         "    fig, ax = plt.subplots()\n"
         "    for j in range(1, len(head)):\n"
         "        ax.plot([r[0] for r in data], [r[j] for r in data], label=head[j])\n"
         "    ax.set_xlabel(head[0])\n"
         "    ax.legend()\n"
         "    fig.savefig(name.replace(\".csv\", \".png\"))\n";
    text_file("plot.py", s);
  }

  void manifest(const std::string& command, const RunConfig& cfg, const json& summary, double wall) {
    json m;
    m["command"] = command;
    m["config"] = to_json(cfg);
    m["files"] = files_;
    m["summary"] = summary;
    m["wall_time_s"] = wall;
    m["versions"] = {{"hessvar", kVersion},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cli11", CLI11_VERSION},
                     {"compiler", __VERSION__}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<std::string> csvs_;
};

// ---------------------------------------------------------------------------
// Commands. Each writes its files into out and returns a JSON summary.

template <class T, class F>
std::vector<double> column(const std::vector<T>& rows, F&& f) {
  std::vector<double> c;
  c.reserve(rows.size());
  for (const auto& r : rows) c.push_back(static_cast<double>(f(r)));
  return c;
}

inline void write_profile(OutputDir& out, const std::string& name, const RadialProfile& prof) {
  out.csv(name, {"r", "u", "du"}, {prof.g().r, prof.u, prof.du});
}

inline json cmd_exponent(const RunConfig& c, OutputDir*) {
  const auto ks = critical_exponent(c.params);
  json j;
  if (ks.finite())
    j["kstar"] = ks.value;
  else
    j["kstar"] = "∞";
  j["s0"] = c.params.s0();
  j["regime"] = regime_name(ks.regime);
  return j;
}

inline json cmd_quotient(const RunConfig& c, OutputDir* out) {
  const auto grid = build_grid(c);
  RadialProfile prof;
  if (c.profile == "extremal") {
    ExtremalSpec spec{c.params, c.extremal.lambda};
    prof = extremal_profile(spec, grid);
    const double shift = prof.u.back();
    for (double& x : prof.u) x -= shift;
  } else {
    prof = quadratic_profile(grid);
  }
  const auto q = ball_quotient(c.params, prof);
  if (out) write_profile(*out, "profile.csv", prof);
  return {{"energy", q.energy},
          {"wnorm", q.wnorm},
          {"quotient", q.quotient},
          {"kstar", q.kstar},
          {"by_parts_gap", energy_by_parts_check(c.params, prof)}};
}

inline json cmd_extremal(const RunConfig& c, OutputDir* out) {
  ExtremalSpec spec{c.params, c.extremal.lambda};
  const auto q = sharp_quotient(spec);
  json j{{"cstar", q.quotient}, {"energy", q.energy}, {"wnorm", q.wnorm}, {"kstar", q.kstar}};
  if (c.extremal.perturbations > 0) {
    const auto rep = maximality_probe(spec, c.extremal.perturbations, c.extremal.amplitude, c.seed);
    j["max_ratio"] = rep.max_ratio;
    j["rejected_perturbations"] = rep.failures.size();
    if (out) {
      std::vector<double> idx(rep.quotients.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
      out->csv("perturbations.csv", {"sample", "amplitude", "quotient"}, {idx, rep.amplitudes, rep.quotients});
    }
  }
  if (out) write_profile(*out, "extremal.csv", extremal_profile(spec, build_grid(c)));
  return j;
}

inline json cmd_flow(const RunConfig& c, OutputDir* out) {
  c.params.validate_solver();
  FlowConfig fc;
  fc.tol = c.tol.flow;
  const auto st = flow_to_steady(c.params, quadratic_profile(build_grid(c)), build_nl(c), fc);
  if (out) {
    write_profile(*out, "profile.csv", st.prof);
    out->csv("trace.csv", {"step", "time", "dt", "J", "residual"},
             {column(st.trace, [](const auto& r) { return r.step; }),
              column(st.trace, [](const auto& r) { return r.time; }),
              column(st.trace, [](const auto& r) { return r.dt; }),
              column(st.trace, [](const auto& r) { return r.J; }),
              column(st.trace, [](const auto& r) { return r.residual; })});
  }
  if (!st.converged) throw NumericalFailure("flow: no convergence within the step limit");
  return {{"J", st.energy},
          {"residual", st.residual},
          {"steps", st.steps},
          {"time", st.time},
          {"sup_norm", max_abs(st.prof.u)},
          {"converged", st.converged}};
}

inline json cmd_eigen(const RunConfig& c, OutputDir* out) {
  const auto e = inverse_iteration(c.params, quadratic_profile(build_grid(c)), c.tol.eigen);
  if (out) {
    write_profile(*out, "phi1.csv", e.phi1);
    out->csv("history.csv", {"iteration", "lambda", "residual"},
             {column(e.history, [](const auto& r) { return r.iteration; }),
              column(e.history, [](const auto& r) { return r.lambda; }),
              column(e.history, [](const auto& r) { return r.residual; })});
  }
  return {{"lambda1", e.lambda1}, {"iterations", e.iterations}, {"residual", e.residual}};
}

inline json cmd_solve(const RunConfig& c, OutputDir* out) {
  c.params.validate_solver();
  const auto nl = build_nl(c);
  const auto lam = inverse_iteration(c.params, quadratic_profile(build_grid(c)), c.tol.eigen).lambda1;
  const auto sub = validate_sublinear(nl, c.params, lam);
  const auto sup = validate_superlinear(nl, c.params, lam);
  if (sub.passes_sublinear()) {
    SublinearConfig sc;
    sc.N = c.grid.N;
    sc.gamma = c.grid.gamma;
    sc.beta = std::max(c.grid.beta, 2.0);
    sc.flow.tol = c.tol.flow;
    sc.eigen_tol = c.tol.eigen;
    const auto r = solve_sublinear(c.params, nl, sc);
    const auto& cert = r.certificate;
    if (out) {
      write_profile(*out, "solution.csv", r.state.prof);
      out->csv("levels.csv", {"m", "sup_norm", "J", "residual", "steps", "K2", "min_trace_J"},
               {column(r.levels, [](const auto& l) { return l.m; }),
                column(r.levels, [](const auto& l) { return l.sup_norm; }),
                column(r.levels, [](const auto& l) { return l.J; }),
                column(r.levels, [](const auto& l) { return l.residual; }),
                column(r.levels, [](const auto& l) { return l.steps; }),
                column(r.levels, [](const auto& l) { return l.K2; }),
                column(r.levels, [](const auto& l) { return l.min_trace_J; })});
    }
    return {{"mode", "sublinear"},
            {"lambda1", r.lambda1},
            {"J", r.state.energy},
            {"sup_norm", max_abs(r.state.prof.u)},
            {"independent_residual", cert.independent_residual},
            {"sup_spread", cert.sup_spread},
            {"J_negative", cert.J_negative},
            {"residual_ok", cert.residual_ok},
            {"lower_bound_ok", cert.lower_bound_ok},
            {"certificate", cert.passes()}};
  }
  if (sup.passes_superlinear()) {
    SuperlinearConfig sc;
    sc.N = c.grid.N;
    sc.gamma = c.grid.gamma;
    sc.beta = c.grid.beta;
    sc.shoot.tol = c.tol.shoot;
    sc.eigen_tol = c.tol.eigen;
    const auto r = solve_superlinear(c.params, nl, sc);
    const auto& cert = r.certificate;
    if (out) {
      write_profile(*out, "solution.csv", r.solution.prof);
      out->csv("J_of_t.csv", {"t", "J"}, {r.t_values, r.J_of_t});
      out->csv("sweep.csv", {"a", "gap", "ok"},
               {column(r.sweep, [](const auto& s) { return s.a; }), column(r.sweep, [](const auto& s) { return s.gap; }),
                column(r.sweep, [](const auto& s) { return s.ok ? 1.0 : 0.0; })});
    }
    return {{"mode", "superlinear"},
            {"lambda1", r.lambda1},
            {"J", r.J},
            {"center_value", r.solution.center_value},
            {"residual", r.solution.ode_residual},
            {"interior_max", cert.interior_max},
            {"far_end_scale", cert.far_end_scale},
            {"beta0", cert.beta0},
            {"certificate", cert.passes()}};
  }
  throw InvalidInput("solve: nl satisfies neither the sublinear nor the superlinear growth hypotheses (lambda1 = " +
                     fmt(lam) + ", f/|z|^k at 0- = " + fmt(sub.sub0_limit) + ", at -inf = " + fmt(sub.inf_limit) + ")");
}

inline json cmd_nonexist(const RunConfig& c, OutputDir* out) {
  const auto rep = nonexistence_demo(c.params, build_nl(c), c.nonexist.deltas, c.nonexist.eta, c.grid.N);
  if (out) {
    out->csv("comparison.csv", {"delta", "w_2delta", "lower_bound"}, {rep.deltas, rep.w_at_2delta, rep.lower_bounds});
    out->csv("phi.csv", {"z", "phi", "dphi", "d2phi"},
             {column(rep.phi_table, [](const auto& r) { return r.z; }),
              column(rep.phi_table, [](const auto& r) { return r.phi; }),
              column(rep.phi_table, [](const auto& r) { return r.dphi; }),
              column(rep.phi_table, [](const auto& r) { return r.d2phi; })});
  }
  json j{{"slope", rep.slope},
         {"expected_slope", rep.expected_slope},
         {"divergent", rep.divergent},
         {"integral_converges", rep.integrability.converges},
         {"tail_exponent", rep.integrability.tail_exponent},
         {"phi_monotone", rep.phi_monotone},
         {"phi_convex", rep.phi_convex}};
  if (rep.integrability.converges) j["integral"] = rep.integrability.value;
  return j;
}

using Command = std::function<json(const RunConfig&, OutputDir*)>;

inline const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m{
      {"exponent", cmd_exponent}, {"quotient", cmd_quotient}, {"extremal", cmd_extremal}, {"flow", cmd_flow},
      {"eigen", cmd_eigen},       {"solve", cmd_solve},       {"nonexist", cmd_nonexist}};
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

/// "a:b:c" -> a, a+c, ..., b (inclusive).
inline std::vector<double> parse_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput("range '" + spec + "': cannot parse '" + item + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw InvalidInput("range '" + spec + "' must be a value or a:b:step");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(step != 0.0) || (b - a) / step < -1e-9) throw InvalidInput("range '" + spec + "': step has the wrong sign");
  const long count = std::lround(std::floor((b - a) / step + 1e-9)) + 1;
  if (count > 100000) throw InvalidInput("range '" + spec + "' has too many points");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) v[i] = a + i * step;
  if (count > 1 && std::abs(v.back() - b) <= 1e-9 * std::abs(step)) v.back() = b;
  return v;
}

inline void apply_axis(RunConfig& c, const std::string& name, double v) {
  if (name == "s")
    c.params.s = v;
  else if (name == "R")
    c.params.R = v;
  else if (name == "p")
    c.nl.p = v;
  else if (name == "n" || name == "k") {
    if (v != std::round(v)) throw InvalidInput("sweep over " + name + " needs integer values");
    (name == "n" ? c.params.n : c.params.k) = static_cast<int>(v);
  } else
    throw InvalidInput("cannot sweep over " + name);
}

struct PointOutcome {
  json summary;
  std::string error;
  int exit_code = 0;
};

inline PointOutcome run_point(const std::string& command, const RunConfig& c, OutputDir* out) {
  PointOutcome o;
  try {
    c.validate();
    o.summary = commands().at(command)(c, out);
  } catch (const InvalidInput& e) {
    o.error = e.what();
    o.exit_code = 2;
  } catch (const std::exception& e) {
    o.error = e.what();
    o.exit_code = 3;
  }
  return o;
}

/// Each point runs in its own subdirectory on a worker pool; the table is
/// assembled in point order afterwards, so thread timing cannot change it.
inline json run_sweep(const RunConfig& base, const SweepAxis& axis, const std::string& command, int jobs,
                      bool plotscript, OutputDir& out) {
  if (!commands().count(command)) throw InvalidInput("sweep: unknown command " + command);
  const std::size_t P = axis.values.size();
  std::vector<PointOutcome> results(P);
  std::vector<RunConfig> cfgs(P, base);
  std::vector<std::string> names(P);
  for (std::size_t i = 0; i < P; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%03zu", i);
    names[i] = buf;
    cfgs[i].output_dir = (out.path() / names[i]).string();
    apply_axis(cfgs[i], axis.name, axis.values[i]);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < P; i = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      OutputDir sub(cfgs[i].output_dir);
      results[i] = run_point(command, cfgs[i], &sub);
      if (plotscript) sub.plotscript();
      json summary = results[i].summary;
      if (!results[i].error.empty()) summary = {{"error", results[i].error}};
      sub.manifest(command, cfgs[i], summary,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(P)));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::set<std::string> keys;
  for (const auto& r : results)
    for (const auto& [k, v] : r.summary.items())
      if (v.is_number() || v.is_boolean()) keys.insert(k);
  std::vector<std::string> header{"point", axis.name, "ok"};
  std::vector<std::vector<double>> cols(3 + keys.size(), std::vector<double>(P));
  for (std::size_t i = 0; i < P; ++i) {
    cols[0][i] = static_cast<double>(i);
    cols[1][i] = axis.values[i];
    cols[2][i] = results[i].error.empty() ? 1.0 : 0.0;
    std::size_t j = 3;
    for (const auto& k : keys) {
      const auto& s = results[i].summary;
      double v = std::numeric_limits<double>::quiet_NaN();
      if (s.contains(k) && s[k].is_boolean())
        v = s[k].get<bool>() ? 1.0 : 0.0;
      else if (s.contains(k) && s[k].is_number())
        v = s[k].get<double>();
      cols[j++][i] = v;
    }
  }
  header.insert(header.end(), keys.begin(), keys.end());
  out.csv("sweep.csv", header, cols);
  for (const auto& n : names) out.subdir(n);

  json failed = json::array();
  for (std::size_t i = 0; i < P; ++i)
    if (!results[i].error.empty()) failed.push_back({{"point", i}, {"error", results[i].error}});
  return {{"command", command}, {"axis", axis.name}, {"points", P}, {"failed", failed}};
}

// ---------------------------------------------------------------------------
// Argument handling

struct Overrides {
  std::optional<int> n, k, N;
  std::optional<double> s, R, gamma, beta, borderline;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir, nl_kind, profile;
  std::optional<double> c, p, coef, sigma, nl_lambda, delta, eps, M, m;
  std::optional<double> flow_tol, shoot_tol, eigen_tol;
  std::optional<double> ext_lambda, amplitude, eta;
  std::optional<int> perturbations;
  std::vector<double> deltas;

  void apply(RunConfig& c_) const {
    auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(c_.params.n, n);
    set(c_.params.k, k);
    set(c_.params.s, s);
    set(c_.params.R, R);
    set(c_.params.borderline_exponent, borderline);
    set(c_.grid.N, N);
    set(c_.grid.gamma, gamma);
    set(c_.grid.beta, beta);
    set(c_.seed, seed);
    set(c_.output_dir, output_dir);
    set(c_.nl.kind, nl_kind);
    set(c_.profile, profile);
    set(c_.nl.c, c);
    set(c_.nl.p, p);
    set(c_.nl.coef, coef);
    if (sigma) c_.nl.sigma = *sigma;
    set(c_.nl.lambda, nl_lambda);
    set(c_.nl.delta, delta);
    set(c_.nl.eps, eps);
    set(c_.nl.M, M);
    set(c_.nl.m, m);
    set(c_.tol.flow, flow_tol);
    set(c_.tol.shoot, shoot_tol);
    set(c_.tol.eigen, eigen_tol);
    set(c_.extremal.lambda, ext_lambda);
    set(c_.extremal.amplitude, amplitude);
    set(c_.extremal.perturbations, perturbations);
    set(c_.nonexist.eta, eta);
    if (!deltas.empty()) c_.nonexist.deltas = deltas;
  }
};

struct Invocation {
  std::string config_path;
  Overrides ov;
  bool plotscript = false;
  bool print_config = false;
  std::map<std::string, std::string> ranges;  // sweep axes
  std::string sweep_command;
  int jobs = 0;
};

inline void add_common(CLI::App* sub, Invocation& inv, bool sweep) {
  auto& o = inv.ov;
  sub->add_option("--config", inv.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  if (!sweep) {
    sub->add_option("--n", o.n, "dimension");
    sub->add_option("--k", o.k, "Hessian order");
    sub->add_option("--s", o.s, "weight parameter s");
    sub->add_option("--R", o.R, "ball radius");
    sub->add_option("--p", o.p, "power exponent");
  }
  sub->add_option("--borderline-exponent", o.borderline, "k* used when 2k = n");
  sub->add_option("--N", o.N, "grid cells");
  sub->add_option("--gamma", o.gamma, "origin grading (0 = default)");
  sub->add_option("--beta", o.beta, "boundary clustering");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--output-dir", o.output_dir, "output directory");
  sub->add_option("--nl", o.nl_kind, "nonlinearity kind");
  sub->add_option("--profile", o.profile, "quotient profile: quadratic or extremal");
  sub->add_option("--c", o.c, "constant source value");
  sub->add_option("--coef", o.coef, "power coefficient");
  sub->add_option("--sigma", o.sigma, "weight exponent (default 2sk)");
  sub->add_option("--nl-lambda", o.nl_lambda, "eigen nonlinearity lambda");
  sub->add_option("--delta", o.delta, "mollification delta");
  sub->add_option("--eps", o.eps, "mollification eps");
  sub->add_option("--M", o.M, "mollification M");
  sub->add_option("--m", o.m, "cap level m");
  sub->add_option("--flow-tol", o.flow_tol, "flow steady-state tolerance");
  sub->add_option("--shoot-tol", o.shoot_tol, "shooting bisection tolerance");
  sub->add_option("--eigen-tol", o.eigen_tol, "inverse iteration tolerance");
  sub->add_option("--lambda", o.ext_lambda, "extremal scale lambda");
  sub->add_option("--perturbations", o.perturbations, "maximality probe samples");
  sub->add_option("--amplitude", o.amplitude, "maximality probe amplitude");
  sub->add_option("--deltas", o.deltas, "nonexistence deltas");
  sub->add_option("--eta", o.eta, "nonexistence radius");
  sub->add_flag("--emit-plotscript", inv.plotscript, "write plot.py referencing the CSVs");
  sub->add_flag("--print-config", inv.print_config, "print the resolved configuration and exit");
}

inline RunConfig resolve(const Invocation& inv) {
  RunConfig c = inv.config_path.empty() ? RunConfig{} : load_config(inv.config_path);
  inv.ov.apply(c);
  if (c.output_dir.empty()) {
    const char* env = std::getenv("HESSVAR_OUTPUT_DIR");
    c.output_dir = env && *env ? env : "hessvar_out";
  }
  c.validate();
  return c;
}

inline int fail(const std::string& kind, const std::string& message, int code) {
  json e{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << e.dump() << '\n';
  return code;
}

inline int run(int argc, char** argv) {
  CLI::App app{"Radial k-Hessian variational toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Invocation inv;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> help{
      {"exponent", "critical exponent k*(s), s0 and regime"},
      {"quotient", "Hessian energy, weighted norm and quotient of a profile on the ball"},
      {"extremal", "sharp constant from the whole-space extremal, with a maximality probe"},
      {"flow", "descent flow to a steady state"},
      {"eigen", "principal eigenpair"},
      {"solve", "sublinear or superlinear Dirichlet problem with certificate"},
      {"nonexist", "nonexistence comparison demonstrator"}};
  for (const auto& [name, text] : help) {
    subs[name] = app.add_subcommand(name, text);
    add_common(subs[name], inv, false);
  }
  auto* sweep = app.add_subcommand("sweep", "run a command over a parameter range on a worker pool");
  add_common(sweep, inv, true);
  for (const char* axis : {"s", "R", "p", "n", "k"})
    sweep->add_option(std::string("--") + axis, inv.ranges[axis], std::string("range a:b:step for ") + axis);
  sweep->add_option("--jobs", inv.jobs, "worker threads (0 = hardware)");
  sweep->add_option("command", inv.sweep_command, "command to run at each point")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), 2);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = resolve(inv);
    if (inv.print_config) {
      std::cout << to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (name == "sweep") {
      std::vector<SweepAxis> axes;
      for (const auto& [k, v] : inv.ranges)
        if (!v.empty()) axes.push_back({k, parse_range(v)});
      if (axes.size() != 1) throw InvalidInput("sweep needs exactly one range option (--s, --R, --p, --n or --k)");
      const int jobs = inv.jobs > 0 ? inv.jobs : std::max(1u, std::thread::hardware_concurrency());
      OutputDir out(cfg.output_dir);
      const json summary = run_sweep(cfg, axes.front(), inv.sweep_command, jobs, inv.plotscript, out);
      if (inv.plotscript) out.plotscript();
      out.manifest("sweep " + inv.sweep_command, cfg, summary,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      std::cout << summary.dump(2) << '\n';
      return summary["failed"].empty() ? 0 : 3;
    }
    const auto& cmd = commands().at(name);
    if (name == "exponent") {
      std::cout << cmd(cfg, nullptr).dump(2) << '\n';
      return 0;
    }
    OutputDir out(cfg.output_dir);
    json summary;
    try {
      summary = cmd(cfg, &out);
    } catch (const std::exception& e) {
      out.manifest(name, cfg, {{"error", e.what()}},
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      throw;
    }
    if (inv.plotscript) out.plotscript();
    out.manifest(name, cfg, summary, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const InvalidInput& e) {
    return fail("config", e.what(), 2);
  } catch (const DomainError& e) {
    return fail("domain", e.what(), 3);
  } catch (const NumericalFailure& e) {
    return fail("numerical", e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 3);
  }
}

}  // namespace hessvar::cli

#endif  // HESSVAR_CLI_HPP
