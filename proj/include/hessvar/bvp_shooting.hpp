#ifndef HESSVAR_BVP_SHOOTING_HPP
#define HESSVAR_BVP_SHOOTING_HPP

// S_k(D^2 u) = psi(r, u) on B_R, u(R) = 0, by shooting on u(0).

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/hessian_core.hpp"
#include "hessvar/nonlinearity.hpp"
#include "hessvar/radial_calculus.hpp"

namespace hessvar {

/// March the divergence form outward from u(0) = a:
///   F_{i+1/2} = F_{i-1/2} + L_i f(u_i),  u_{i+1} = u_i + (F/A)^{1/k} h.
/// u(R) is left free.
inline RadialProfile integrate_out(const DivergenceForm& form, std::span<const double> L,
                                   const Nonlinearity& nl, double a) {
  const int N = form.N();
  const int k = form.params().k;
  const auto A = form.conductance();
  const auto& g = form.grid();
  std::vector<double> u(N + 1);
  u[0] = a;
  double Q = 0.0;
  for (int i = 0; i < N; ++i) {
    const double f = nl.f(u[i]);
    if (f < 0.0 || !std::isfinite(f))
      throw NumericalFailure("integrate_out: psi < 0 at r = " + std::to_string(g.r[i]));
    Q += L[i] * f;
    u[i + 1] = u[i] + std::pow(Q / A[i], 1.0 / k) * g.h(i);
  }
  return make_profile(form.grid_ptr(), std::move(u));
}

inline RadialProfile integrate_out(const ProblemParams& p, const Nonlinearity& nl, double a,
                                   std::shared_ptr<const RadialGrid> grid) {
  DivergenceForm form(p, std::move(grid));
  const auto L = nl.loads(form);
  return integrate_out(form, L, nl, a);
}

/// sqrt(sum V_i (S_k - psi)^2 / sum V_i psi^2) over interior nodes, with S_k
/// from radial_sk on three-point first and second differences of u. Taking
/// u'' straight from u keeps the error O(h^2) next to r = R.
inline double independent_residual(const ProblemParams& p, const Nonlinearity& nl, const RadialProfile& prof,
                                   double r_min = 0.0) {
  const auto& g = prof.g();
  const auto& r = g.r;
  const auto& u = prof.u;
  const auto V = hat_moments(g, p.n - 1.0);
  double acc = 0.0, ref = 0.0;
  for (int i = 1; i < g.N(); ++i) {
    if (r[i] < r_min) continue;
    const double h1 = r[i] - r[i - 1], h2 = r[i + 1] - r[i];
    const double u1 = -h2 / (h1 * (h1 + h2)) * u[i - 1] + (h2 - h1) / (h1 * h2) * u[i] + h1 / (h2 * (h1 + h2)) * u[i + 1];
    const double u2 = 2.0 * ((u[i + 1] - u[i]) / h2 - (u[i] - u[i - 1]) / h1) / (h1 + h2);
    const double psi = nl.weight_at(g, i) * nl.f(u[i]);
    const double d = radial_sk(p, u1, u2, r[i]) - psi;
    acc += V[i] * d * d;
    ref += V[i] * psi * psi;
  }
  return ref > 0.0 ? std::sqrt(acc / ref) : std::sqrt(acc);
}

struct ShootConfig {
  double tol = 1e-12;
  int max_iter = 200;
  double scale = 1.0;
  int sweep_lo = -4;
  int sweep_hi = 8;
  double degenerate_rel = 1e-8;
};

struct ShootIterate {
  double a = 0.0;
  double gap = 0.0;
};

enum class ShootStatus { Converged, DegenerateBracket };

struct ShootResult {
  RadialProfile prof;
  double center_value = 0.0;
  double boundary_gap = 0.0;
  double ode_residual = 0.0;
  ShootStatus status = ShootStatus::Converged;
  std::vector<ShootIterate> bisection_history;
};

struct SweepPoint {
  double a = 0.0;
  double gap = 0.0;
  bool ok = false;
};

class Shooter {
 public:
  Shooter(const ProblemParams& p, Nonlinearity nl, std::shared_ptr<const RadialGrid> grid, ShootConfig cfg = {})
      : p_(p), nl_(std::move(nl)), form_(p, std::move(grid)), L_(nl_.loads(form_)), cfg_(cfg) {}

  const DivergenceForm& form() const { return form_; }

  RadialProfile march(double a) const { return integrate_out(form_, L_, nl_, a); }

  double gap(double a) const { return march(a).u.back(); }

  /// Boundary gap on a = -2^j scale, j = sweep_lo..sweep_hi.
  std::vector<SweepPoint> sweep() const {
    std::vector<SweepPoint> pts;
    for (int j = cfg_.sweep_lo; j <= cfg_.sweep_hi; ++j) {
      SweepPoint sp{-std::ldexp(cfg_.scale, j), 0.0, false};
      try {
        sp.gap = gap(sp.a);
        sp.ok = std::isfinite(sp.gap);
      } catch (const NumericalFailure&) {
        sp.ok = false;
      }
      pts.push_back(sp);
    }
    return pts;
  }

  /// Adjacent sweep points with a sign change in the boundary gap.
  static std::vector<std::pair<double, double>> brackets(const std::vector<SweepPoint>& pts) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (pts[i].ok && pts[i + 1].ok && (pts[i].gap > 0.0) != (pts[i + 1].gap > 0.0))
        out.emplace_back(pts[i].a, pts[i + 1].a);
    return out;
  }

  ShootResult shoot(double a_lo, double a_hi) const {
    ShootResult res;
    double g_lo = gap(a_lo), g_hi = gap(a_hi);
    res.bisection_history.push_back({a_lo, g_lo});
    res.bisection_history.push_back({a_hi, g_hi});
    if (std::max(std::abs(g_lo) / std::abs(a_lo), std::abs(g_hi) / std::abs(a_hi)) <= cfg_.degenerate_rel) {
      res.status = ShootStatus::DegenerateBracket;
      return finish(std::move(res), a_hi);
    }
    if ((g_lo > 0.0) == (g_hi > 0.0))
      throw NumericalFailure("shoot: no sign change of u(R) on the bracket");

    double a = a_lo, ga = g_lo;
    for (int it = 0; it < cfg_.max_iter; ++it) {
      // secant guess when it stays inside the bracket, bisection otherwise
      double c = 0.5 * (a_lo + a_hi);
      if (it >= 8) {
        const double s = a_lo - g_lo * (a_hi - a_lo) / (g_hi - g_lo);
        if (s > std::min(a_lo, a_hi) && s < std::max(a_lo, a_hi)) c = s;
      }
      const double gc = gap(c);
      res.bisection_history.push_back({c, gc});
      a = c;
      ga = gc;
      if (std::abs(gc) <= cfg_.tol) return finish(std::move(res), a);
      if ((gc > 0.0) == (g_lo > 0.0)) {
        a_lo = c;
        g_lo = gc;
      } else {
        a_hi = c;
        g_hi = gc;
      }
      if (std::abs(a_hi - a_lo) <= 1e-16 * std::abs(a)) return finish(std::move(res), a);
    }
    (void)ga;
    throw NumericalFailure("shoot: maximum iterations reached");
  }

  /// Sweep, then shoot every sign change.
  std::vector<ShootResult> shoot_all() const {
    std::vector<ShootResult> out;
    for (const auto& [lo, hi] : brackets(sweep())) out.push_back(shoot(lo, hi));
    return out;
  }

 private:
  ShootResult finish(ShootResult res, double a) const {
    res.prof = march(a);
    res.center_value = a;
    res.boundary_gap = res.prof.u.back();
    res.prof.u.back() = 0.0;
    res.prof.refresh_derivative();
    res.ode_residual = independent_residual(p_, nl_, res.prof);
    return res;
  }

  ProblemParams p_;
  Nonlinearity nl_;
  DivergenceForm form_;
  std::vector<double> L_;
  ShootConfig cfg_;
};

inline ShootResult shoot(const ProblemParams& p, const Nonlinearity& nl, std::shared_ptr<const RadialGrid> grid,
                         double tol, std::pair<double, double> bracket) {
  ShootConfig cfg;
  cfg.tol = tol;
  return Shooter(p, nl, std::move(grid), cfg).shoot(bracket.first, bracket.second);
}

// ---------------------------------------------------------------------------
// Comparison problem  d/dr(r^{n-k} w'^k) = C_{n,k} r^{n-1} (r^2 + delta^2)^{-k},
// w(eta) = 0, with C_{n,k} = k / C(n-1,k-1) so that S_k(D^2 w) = (r^2+delta^2)^{-k}.

inline Nonlinearity comparison_nl(int k, double delta) {
  return {Weight{-2.0 * k, delta, {}}, SourceTerm{ConstantSource{1.0}}};
}

inline RadialProfile nonexistence_ode(const ProblemParams& p, double delta, double eta,
                                      std::shared_ptr<const RadialGrid> grid) {
  p.validate();
  if (!(p.n > 2 * p.k)) throw InvalidInput("nonexistence_ode: requires n > 2k");
  if (!(delta > 0.0 && 2.0 * delta < eta && eta < 1.0))
    throw InvalidInput("nonexistence_ode: requires 0 < 2 delta < eta < 1");
  if (std::abs(grid->R() - eta) > 1e-14 * eta) throw InvalidInput("nonexistence_ode: grid must span [0, eta]");
  const auto& r = grid->r;
  const auto it = std::upper_bound(r.begin(), r.end(), delta);
  const auto c = static_cast<int>(it - r.begin()) - 1;
  if (grid->h(c) > 0.25 * delta) throw InvalidInput("nonexistence_ode: grid too coarse to resolve r ~ delta");
  ProblemParams q = p;
  q.R = eta;
  auto w = integrate_out(q, comparison_nl(p.k, delta), 0.0, grid);
  const double shift = w.u.back();
  for (double& x : w.u) x -= shift;
  w.u.back() = 0.0;
  return w;
}

/// Cubic Hermite interpolation of a profile at radius x.
inline double interpolate(const RadialProfile& prof, double x) {
  const auto& r = prof.g().r;
  if (x <= r.front()) return prof.u.front();
  if (x >= r.back()) return prof.u.back();
  const auto c = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin()) - 1;
  const double h = r[c + 1] - r[c], t = (x - r[c]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * prof.u[c] + (t3 - 2 * t2 + t) * h * prof.du[c] +
         (-2 * t3 + 3 * t2) * prof.u[c + 1] + (t3 - t2) * h * prof.du[c + 1];
}

/// c_{n,k} = [C_{n,k} (1 - 2^{2k-n}) / (2^k (n-2k))]^{1/k}: w'(rho) >= c / rho for rho >= 2 delta.
inline double comparison_lower_constant(int n, int k) {
  const double C = k / binomial(n - 1, k - 1);
  return std::pow(C * (1.0 - std::pow(2.0, 2 * k - n)) / (std::pow(2.0, k) * (n - 2 * k)), 1.0 / k);
}

/// Asymptotic slope of w(2 delta) against log delta: (C_{n,k}/(n-2k))^{1/k}.
inline double comparison_log_slope(int n, int k) {
  return std::pow(k / binomial(n - 1, k - 1) / (n - 2 * k), 1.0 / k);
}

}  // namespace hessvar

#endif  // HESSVAR_BVP_SHOOTING_HPP
