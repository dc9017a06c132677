#ifndef HESSVAR_VARIATIONAL_DRIVERS_HPP
#define HESSVAR_VARIATIONAL_DRIVERS_HPP

// End-to-end drivers: growth validation, sublinear minimization by flow,
// superlinear solutions by shooting, and the nonexistence demonstrator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hessvar/bvp_shooting.hpp"
#include "hessvar/errors.hpp"
#include "hessvar/flow_engine.hpp"
#include "hessvar/nonlinearity.hpp"
#include "hessvar/quadrature.hpp"
#include "hessvar/radial_calculus.hpp"
#include "hessvar/spectral.hpp"

namespace hessvar {

struct ZRange {
  double min_abs = 1e-8;
  double max_abs = 1e8;
  int samples = 161;
  double M = 10.0;  // threshold for the Ambrosetti-Rabinowitz margin
};

struct GrowthReport {
  double sub0_limit = 0.0;  // f/|z|^k as z -> 0-
  double inf_limit = 0.0;   // f/|z|^k as z -> -inf
  std::optional<double> ar_theta;
  double tail_exponent = 0.0;  // log-log slope of f at the far end
  bool subcritical_flag = true;
  bool near_zero_ok = false;
  bool at_infinity_ok = false;
  bool ar_ok = false;

  bool passes_superlinear() const { return near_zero_ok && at_infinity_ok && ar_ok && subcritical_flag; }
  bool passes_sublinear() const { return near_zero_ok && at_infinity_ok; }
};

namespace detail {

inline std::vector<double> log_samples(double lo, double hi, int n) {
  std::vector<double> z(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) z[i] = -std::exp(a + (b - a) * i / (n - 1));
  return z;
}

inline GrowthReport growth_limits(const Nonlinearity& nl, const ProblemParams& p, const ZRange& zr) {
  GrowthReport g;
  const auto z = log_samples(zr.min_abs, zr.max_abs, zr.samples);
  const int k = p.k;
  g.sub0_limit = nl.f(z.front()) / std::pow(-z.front(), k);
  g.inf_limit = nl.f(z.back()) / std::pow(-z.back(), k);
  const std::size_t m = z.size();
  g.tail_exponent = std::log(nl.f(z[m - 1]) / nl.f(z[m - 2])) / std::log(z[m - 1] / z[m - 2]);
  double theta = std::numeric_limits<double>::infinity();
  for (double x : z)
    if (x < -zr.M) theta = std::min(theta, 1.0 - (k + 1.0) * nl.F(x) / (-x * nl.f(x)));
  if (std::isfinite(theta)) g.ar_theta = theta;
  const auto ks = critical_exponent(p);
  g.subcritical_flag = !ks.finite() || ks.regime != ExponentRegime::Subcritical || g.tail_exponent < ks.value - 1.0;
  return g;
}

}  // namespace detail

/// Superlinear hypotheses: f/|z|^k below lambda_1 at 0-, above at -inf,
/// int_z^0 f <= (1-theta)/(k+1) |z| f for z < -M, and subcritical growth.
inline GrowthReport validate_superlinear(const Nonlinearity& nl, const ProblemParams& p, double lambda1,
                                         const ZRange& zr = {}) {
  auto g = detail::growth_limits(nl, p, zr);
  g.near_zero_ok = g.sub0_limit < lambda1;
  g.at_infinity_ok = g.inf_limit > lambda1;
  g.ar_ok = g.ar_theta.has_value() && *g.ar_theta > 0.0;
  return g;
}

/// Sublinear hypotheses: f/|z|^k above lambda_1 at 0-, below at -inf.
inline GrowthReport validate_sublinear(const Nonlinearity& nl, const ProblemParams& p, double lambda1,
                                       const ZRange& zr = {}) {
  auto g = detail::growth_limits(nl, p, zr);
  g.near_zero_ok = g.sub0_limit > lambda1;
  g.at_infinity_ok = g.inf_limit < lambda1;
  g.ar_ok = g.ar_theta.has_value() && *g.ar_theta > 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Sublinear problems

struct SublinearConfig {
  int N = 4096;
  double gamma = 0.0;  // 0 means the default grading
  double beta = 2.0;   // |z|^q with q < 1 makes psi nonsmooth at r = R
  std::vector<double> levels{10.0, 100.0, 1000.0};
  FlowConfig flow{};
  double residual_tol = 1e-5;  // independent re-evaluation
  double eigen_tol = 1e-8;  // residual round-off grows like N^2
  double theta = 0.5;
};

struct SublinearLevel {
  double m = 0.0;
  double sup_norm = 0.0;
  double J = 0.0;
  double residual = 0.0;
  int steps = 0;
  bool converged = false;
  double K2 = 0.0;
  double min_trace_J = 0.0;
};

struct SublinearCertificate {
  bool J_negative = false;
  bool residual_ok = false;
  bool nontrivial = false;
  bool lower_bound_ok = false;
  bool converged = false;
  double independent_residual = 0.0;
  double sup_spread = 0.0;  // (max - min) / min of sup|u_m| over levels
  double shooting_gap = std::numeric_limits<double>::quiet_NaN();

  bool passes() const { return J_negative && residual_ok && nontrivial && lower_bound_ok && converged; }
};

struct SublinearResult {
  FlowState state;
  double lambda1 = 0.0;
  double init_scale = 0.0;
  std::vector<SublinearLevel> levels;
  SublinearCertificate certificate;
};

namespace detail {

// sup_z [F(z) - (1-theta) lambda_1 |z|^{k+1} / (k+1)] over a log grid.
inline double growth_excess(const Nonlinearity& nl, int k, double lambda1, double theta) {
  double K = 0.0;
  for (double z : log_samples(1e-12, 1e8, 401))
    K = std::max(K, nl.F(z) - (1.0 - theta) * lambda1 * std::pow(-z, k + 1) / (k + 1));
  return K;
}

inline double sum_all(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

/// Regularized flows at each level m, then the unregularized flow; the
/// certificate records J < 0, residuals, nontriviality and the uniform lower bound.
inline SublinearResult solve_sublinear(const ProblemParams& p, const Nonlinearity& nl, const SublinearConfig& cfg = {}) {
  p.validate_solver();
  const auto grid = make_grid(p, cfg.N, cfg.gamma > 0.0 ? cfg.gamma : default_grading(p), cfg.beta);
  SublinearResult out;
  const auto eig = inverse_iteration(p, quadratic_profile(grid), cfg.eigen_tol);
  out.lambda1 = eig.lambda1;
  DivergenceForm form(p, grid);

  RadialProfile current;
  bool seeded = false;
  auto run_level = [&](const Nonlinearity& nlm, double m) {
    LocalSource src(form, nlm);
    FlowEngine<LocalSource> eng(form, src, cfg.flow);
    if (!seeded) {
      // a phi_1 with the most negative J over a geometric scan
      double bestJ = std::numeric_limits<double>::infinity(), best_a = 0.0;
      for (int j = -30; j <= 10; ++j) {
        const double a = std::ldexp(1.0, j);
        std::vector<double> u(eig.phi1.u);
        for (double& x : u) x *= a;
        const double J = eng.J(u);
        if (J < bestJ) {
          bestJ = J;
          best_a = a;
        }
      }
      if (!(bestJ < 0.0)) throw NumericalFailure("solve_sublinear: no a with J(a phi_1) < 0");
      out.init_scale = best_a;
      current = eig.phi1;
      for (double& x : current.u) x *= best_a;
      current.refresh_derivative();
      seeded = true;
    }
    FlowState st = eng.run(current);
    SublinearLevel lv;
    lv.m = m;
    lv.sup_norm = max_abs(st.prof.u);
    lv.J = st.energy;
    lv.residual = st.residual;
    lv.steps = st.steps;
    lv.converged = st.converged;
    const double K = detail::growth_excess(nlm, p.k, out.lambda1, cfg.theta);
    lv.K2 = K * detail::sum_all(src.loads());
    lv.min_trace_J = std::numeric_limits<double>::infinity();
    for (const auto& row : st.trace) lv.min_trace_J = std::min(lv.min_trace_J, row.J);
    current = st.prof;
    return std::make_pair(st, lv);
  };

  bool bounds_ok = true;
  for (double m : cfg.levels) {
    auto [st, lv] = run_level(regularized_nl(nl, m, p.k), m);
    bounds_ok = bounds_ok && lv.min_trace_J >= -lv.K2;
    out.levels.push_back(lv);
  }
  auto [st, lv] = run_level(nl, std::numeric_limits<double>::infinity());
  bounds_ok = bounds_ok && lv.min_trace_J >= -lv.K2;
  out.state = st;

  auto& c = out.certificate;
  if (!out.levels.empty()) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& l : out.levels) {
      lo = std::min(lo, l.sup_norm);
      hi = std::max(hi, l.sup_norm);
    }
    c.sup_spread = (hi - lo) / lo;
  }
  out.levels.push_back(lv);
  c.independent_residual = independent_residual(p, nl, st.prof);
  c.residual_ok = st.converged && c.independent_residual <= cfg.residual_tol;
  c.converged = st.converged;
  c.J_negative = st.energy < 0.0;
  c.nontrivial = max_abs(st.prof.u) > 0.0;
  c.lower_bound_ok = bounds_ok;

  // cross-check: shooting on the same discrete equations from the flow's center value
  try {
    Shooter sh(p, nl, grid);
    const double a = st.prof.u.front();
    const auto res = sh.shoot(2.0 * a, 0.5 * a);
    double gap = 0.0;
    for (std::size_t i = 0; i < res.prof.u.size(); ++i) gap = std::max(gap, std::abs(res.prof.u[i] - st.prof.u[i]));
    c.shooting_gap = gap / max_abs(st.prof.u);
  } catch (const NumericalFailure&) {
  }
  return out;
}

// ---------------------------------------------------------------------------
// Superlinear problems

struct SuperlinearConfig {
  int N = 8192;
  double gamma = 0.0;
  double beta = 1.0;
  ShootConfig shoot{};
  int widen_attempts = 4;  // each widens the sweep by 2^12
  double residual_tol = 1e-5;
  int t_samples = 40;
  double eigen_tol = 1e-8;  // residual round-off grows like N^2
};

struct SuperlinearCertificate {
  bool residual_ok = false;
  bool J_positive = false;
  bool nontrivial = false;
  bool interior_max = false;
  bool small_norm_positive = false;
  bool far_end_negative = false;  // J(a phi_1) < -1 for some large a
  double far_end_scale = 0.0;
  double beta0 = 0.0;

  bool passes() const { return residual_ok && J_positive && nontrivial && interior_max; }
};

struct SuperlinearResult {
  ShootResult solution;
  double J = 0.0;
  double lambda1 = 0.0;
  std::vector<SweepPoint> sweep;
  std::vector<double> t_values;
  std::vector<double> J_of_t;
  SuperlinearCertificate certificate;
};

inline SuperlinearResult solve_superlinear(const ProblemParams& p, const Nonlinearity& nl,
                                           const SuperlinearConfig& cfg = {}) {
  p.validate_solver();
  const auto grid = make_grid(p, cfg.N, cfg.gamma > 0.0 ? cfg.gamma : default_grading(p), cfg.beta);
  SuperlinearResult out;
  const auto eig = inverse_iteration(p, quadratic_profile(grid), cfg.eigen_tol);
  out.lambda1 = eig.lambda1;

  ShootConfig sc = cfg.shoot;
  std::vector<std::pair<double, double>> br;
  for (int attempt = 0; attempt <= cfg.widen_attempts && br.empty(); ++attempt) {
    Shooter sh(p, nl, grid, sc);
    auto pts = sh.sweep();
    out.sweep.insert(out.sweep.end(), pts.begin(), pts.end());
    br = Shooter::brackets(pts);
    sc.scale *= std::ldexp(1.0, sc.sweep_hi - sc.sweep_lo);
  }
  if (br.empty()) throw NumericalFailure("solve_superlinear: no sign change of u(R) found in the sweep");
  out.solution = Shooter(p, nl, grid, cfg.shoot).shoot(br.front().first, br.front().second);
  const auto& u = out.solution.prof;
  out.J = functional_J(p, u, nl);

  auto& c = out.certificate;
  c.residual_ok = out.solution.ode_residual <= cfg.residual_tol;
  c.J_positive = out.J > 0.0;
  c.nontrivial = max_abs(u.u) > 0.0;

  DivergenceForm form(p, grid);
  LocalSource src(form, nl);
  auto J_scaled = [&](const std::vector<double>& base, double t) {
    std::vector<double> v(base);
    for (double& x : v) x *= t;
    return form.energy(v) / (p.k + 1) - src.potential(v);
  };
  for (int i = 1; i <= cfg.t_samples; ++i) {
    const double t = 2.0 * i / cfg.t_samples;
    out.t_values.push_back(t);
    out.J_of_t.push_back(J_scaled(u.u, t));
  }
  const auto it = std::max_element(out.J_of_t.begin(), out.J_of_t.end());
  const auto idx = static_cast<std::size_t>(it - out.J_of_t.begin());
  c.interior_max = idx > 0 && idx + 1 < out.J_of_t.size() && *it > out.J_of_t.front() && *it > out.J_of_t.back();
  c.small_norm_positive = J_scaled(u.u, 1e-3) > 0.0;

  for (int j = 0; j <= 60; ++j) {
    const double a = std::ldexp(1.0, j);
    if (J_scaled(eig.phi1.u, a) < -1.0) {
      c.far_end_negative = true;
      c.far_end_scale = a;
      break;
    }
  }
  const auto ks = critical_exponent(p);
  if (const auto* pw = std::get_if<PowerSource>(&nl.source.v); pw && ks.finite())
    c.beta0 = (ks.value - 1.0 - pw->p) / (2.0 * p.k * (1.0 + p.s));
  return out;
}

// ---------------------------------------------------------------------------
// Nonexistence demonstrator

struct PhiRow {
  double z = 0.0;
  double phi = 0.0;
  double dphi = 0.0;   // f^{-1/k}
  double d2phi = 0.0;  // -(1/k) f^{-1-1/k} f'
};

struct IntegrabilityReport {
  bool converges = false;
  double tail_exponent = 0.0;  // f^{-1/k} ~ |z|^{-q}
  double value = std::numeric_limits<double>::infinity();
};

struct NonexistenceReport {
  IntegrabilityReport integrability;
  std::vector<PhiRow> phi_table;
  bool phi_monotone = false;
  bool phi_convex = false;
  std::vector<double> deltas;
  std::vector<double> w_at_2delta;
  std::vector<double> lower_bounds;  // c_{n,k} (log 2 delta - log eta)
  double slope = 0.0;                // of w(2 delta) against log delta
  double expected_slope = 0.0;
  bool divergent = false;            // w(2 delta) -> -infinity as delta -> 0
};

/// int_{-inf}^{-eps} f^{-1/k}: convergent iff the tail exponent exceeds 1 + margin.
inline IntegrabilityReport integrability_validator(const Nonlinearity& nl, int k, double eps = 1.0,
                                                   double margin = 0.01) {
  IntegrabilityReport r;
  auto g = [&](double a) { return std::pow(nl.f(-a), -1.0 / k); };
  const double z1 = 1e6, z2 = 1e8;
  r.tail_exponent = -std::log(g(z2) / g(z1)) / std::log(z2 / z1);
  r.converges = r.tail_exponent > 1.0 + margin;
  if (r.converges) {
    QuadConfig qc;
    r.value = log_panel_integral(g, eps, z2, qc) + g(z2) * z2 / (r.tail_exponent - 1.0);
  }
  return r;
}

inline NonexistenceReport nonexistence_demo(const ProblemParams& p, const Nonlinearity& f_spec,
                                            const std::vector<double>& deltas, double eta, int N = 4096) {
  p.validate();
  if (!(p.n > 2 * p.k)) throw InvalidInput("nonexistence_demo requires n > 2k");
  if (!(p.s <= -1.0)) throw InvalidInput("nonexistence_demo requires s <= -1");
  if (deltas.size() < 2) throw InvalidInput("nonexistence_demo needs at least two deltas");
  NonexistenceReport rep;
  const int k = p.k;
  rep.integrability = integrability_validator(f_spec, k);

  // phi(z) = int_{-eps0}^{z} f^{-1/k}, tabulated on z in [-Z, -eps0]
  const double eps0 = 1.0;
  const auto zs = detail::log_samples(eps0, 1e4, 81);
  rep.phi_monotone = rep.phi_convex = true;
  QuadConfig qc;
  for (double z : zs) {
    PhiRow row;
    row.z = z;
    row.phi = -log_panel_integral([&](double a) { return std::pow(f_spec.f(-a), -1.0 / k); }, eps0,
                                  std::max(-z, eps0 * (1.0 + 1e-15)), qc);
    if (z == -eps0) row.phi = 0.0;
    const double f = f_spec.f(z);
    row.dphi = std::pow(f, -1.0 / k);
    row.d2phi = -(1.0 / k) * std::pow(f, -1.0 - 1.0 / k) * f_spec.df(z);
    rep.phi_monotone = rep.phi_monotone && row.dphi > 0.0;
    rep.phi_convex = rep.phi_convex && row.d2phi >= 0.0;
    rep.phi_table.push_back(row);
  }

  const double c = comparison_lower_constant(p.n, k);
  rep.expected_slope = comparison_log_slope(p.n, k);
  const auto grid = make_grid(eta, N, 2.0);
  std::vector<double> x, y;
  for (double d : deltas) {
    const auto w = nonexistence_ode(p, d, eta, grid);
    const double w2 = interpolate(w, 2.0 * d);
    rep.deltas.push_back(d);
    rep.w_at_2delta.push_back(w2);
    rep.lower_bounds.push_back(c * (std::log(2.0 * d) - std::log(eta)));
    x.push_back(std::log(d));
    y.push_back(w2);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  rep.slope = sxy / sxx;
  rep.divergent = rep.slope > 0.5 * rep.expected_slope;
  return rep;
}

}  // namespace hessvar

#endif  // HESSVAR_VARIATIONAL_DRIVERS_HPP
