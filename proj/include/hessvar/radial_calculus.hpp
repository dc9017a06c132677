#ifndef HESSVAR_RADIAL_CALCULUS_HPP
#define HESSVAR_RADIAL_CALCULUS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/hessian_core.hpp"
#include "hessvar/quadrature.hpp"

namespace hessvar {

/// Area of the unit sphere S^{n-1}: omega_2 = 2 pi, omega_3 = 4 pi.
inline double sphere_area(int n) {
  if (n < 1) throw InvalidInput("sphere_area: n must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

struct ProblemParams {
  int n = 3;
  int k = 1;
  double s = 0.0;
  double R = 1.0;
  // k*(s) is "any finite value" when 2k = n; this is the value used.
  double borderline_exponent = 0.0;

  bool operator==(const ProblemParams&) const = default;

  double s0() const { return std::min(1.0, static_cast<double>(n) / (2.0 * k)); }

  void validate() const {
    if (n < 1) throw InvalidInput("n must be >= 1");
    if (k < 1 || k > n) throw InvalidInput("k must satisfy 1 <= k <= n");
    if (!std::isfinite(s)) throw InvalidInput("s must be finite");
    if (!(R > 0.0) || !std::isfinite(R)) throw InvalidInput("R must be positive and finite");
  }

  /// Range accepted by the solver modules: s > -s0.
  void validate_solver() const {
    validate();
    if (!(s > -s0()))
      throw InvalidInput("solver modules require s > -s0 = " + std::to_string(-s0()));
  }

  /// Range of the sharp Hardy-Sobolev inequality: 2k < n, -1 <= s <= 0.
  void validate_sharp() const {
    validate();
    if (2 * k >= n) throw InvalidInput("sharp constants require 2k < n");
    if (s < -1.0 || s > 0.0) throw InvalidInput("sharp constants require -1 <= s <= 0");
  }
};

enum class ExponentRegime { Subcritical, Borderline, Supercritical };

struct CriticalExponent {
  double value = 0.0;  // +inf when supercritical
  ExponentRegime regime = ExponentRegime::Subcritical;

  bool finite() const { return std::isfinite(value); }
};

inline const char* regime_name(ExponentRegime r) {
  switch (r) {
    case ExponentRegime::Subcritical: return "2k<n";
    case ExponentRegime::Borderline: return "2k=n, any finite";
    case ExponentRegime::Supercritical: return "2k>n";
  }
  return "?";
}

/// k*(s) by the four-branch definition. For 2k = n the caller's
/// borderline_exponent is returned (2(k+1) when left at 0).
inline CriticalExponent critical_exponent(const ProblemParams& p) {
  p.validate();
  const double n = p.n, k = p.k;
  if (2 * p.k < p.n) {
    const double v = p.s <= 0.0 ? (k + 1.0) * (n + 2.0 * p.s * k) / (n - 2.0 * k)
                                : (k + 1.0) * n / (n - 2.0 * k);
    return {v, ExponentRegime::Subcritical};
  }
  if (2 * p.k == p.n) {
    const double v = p.borderline_exponent > 0.0 ? p.borderline_exponent : 2.0 * (k + 1.0);
    return {v, ExponentRegime::Borderline};
  }
  return {std::numeric_limits<double>::infinity(), ExponentRegime::Supercritical};
}

inline double radial_sk(const ProblemParams& p, double u1, double u2, double r) {
  return radial_sk(p.n, p.k, u1, u2, r);
}

// ---------------------------------------------------------------------------
// Grid and profile

struct RadialGrid {
  std::vector<double> r;
  double gamma = 1.0;
  double beta = 1.0;  // clustering toward r = R

  int N() const { return static_cast<int>(r.size()) - 1; }
  double R() const { return r.back(); }
  double h(int c) const { return r[c + 1] - r[c]; }
};

inline double default_grading(const ProblemParams& p) { return p.s < 0.0 ? 2.0 : 1.0; }

/// r_i = R [1 - (1 - t^gamma)^beta], t = i/N: like R t^gamma near the origin,
/// cells of width ~ h^beta near R.
inline std::shared_ptr<const RadialGrid> make_grid(double R, int N, double gamma, double beta = 1.0) {
  if (N < 16) throw InvalidInput("make_grid: N must be >= 16");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw InvalidInput("make_grid: gamma must be >= 1");
  if (!(beta >= 1.0) || !std::isfinite(beta)) throw InvalidInput("make_grid: beta must be >= 1");
  if (!(R > 0.0)) throw InvalidInput("make_grid: R must be > 0");
  auto g = std::make_shared<RadialGrid>();
  g->gamma = gamma;
  g->beta = beta;
  g->r.resize(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) {
    const double x = std::pow(static_cast<double>(i) / N, gamma);
    g->r[i] = beta == 1.0 ? R * x : -R * std::expm1(beta * std::log1p(-x));
  }
  g->r[0] = 0.0;
  g->r[N] = R;
  return g;
}

inline std::shared_ptr<const RadialGrid> make_grid(const ProblemParams& p, int N, double gamma,
                                                   double beta = 1.0) {
  p.validate();
  return make_grid(p.R, N, gamma, beta);
}

inline std::shared_ptr<const RadialGrid> make_grid(const ProblemParams& p, int N) {
  return make_grid(p, N, default_grading(p));
}

enum class Parity { Even, Odd, None };

/// Second-order derivative of nodal values on a nonuniform grid. Interior
/// nodes use the 3-point formula, the last node a one-sided 3-point formula.
/// At the origin an even function gets 0 and an odd one the r, r^3 fit.
inline std::vector<double> differentiate(const RadialGrid& g, std::span<const double> f,
                                         Parity origin = Parity::Even) {
  const int N = g.N();
  if (static_cast<int>(f.size()) != N + 1) throw InvalidInput("differentiate: size mismatch");
  const auto& r = g.r;
  std::vector<double> d(f.size(), 0.0);
  for (int i = 1; i < N; ++i) {
    const double h1 = r[i] - r[i - 1], h2 = r[i + 1] - r[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
           h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = r[N] - r[N - 1], h2 = r[N - 1] - r[N - 2];
    d[N] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[N] - (h1 + h2) / (h1 * h2) * f[N - 1] +
           h1 / (h2 * (h1 + h2)) * f[N - 2];
  }
  switch (origin) {
    case Parity::Even: d[0] = 0.0; break;
    case Parity::Odd: {
      const double r1 = r[1], r2 = r[2];
      d[0] = (f[1] * r2 * r2 * r2 - f[2] * r1 * r1 * r1) / (r1 * r2 * (r2 * r2 - r1 * r1));
      break;
    }
    case Parity::None: {
      const double h1 = r[1] - r[0], h2 = r[2] - r[1];
      d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
             h1 / (h2 * (h1 + h2)) * f[2];
      break;
    }
  }
  return d;
}

/// Nodal radial function with its first derivative.
struct RadialProfile {
  std::shared_ptr<const RadialGrid> grid;
  std::vector<double> u;
  std::vector<double> du;

  const RadialGrid& g() const { return *grid; }
  int N() const { return grid->N(); }

  /// Recompute du from u (du(0) = 0).
  void refresh_derivative() { du = differentiate(*grid, u, Parity::Even); }
};

inline RadialProfile make_profile(std::shared_ptr<const RadialGrid> grid, std::vector<double> u) {
  if (!grid) throw InvalidInput("make_profile: null grid");
  if (static_cast<int>(u.size()) != grid->N() + 1) throw InvalidInput("make_profile: size mismatch");
  RadialProfile p{std::move(grid), std::move(u), {}};
  p.refresh_derivative();
  return p;
}

template <class U, class DU>
RadialProfile sample_profile(std::shared_ptr<const RadialGrid> grid, U&& u, DU&& du) {
  RadialProfile p{grid, {}, {}};
  p.u.reserve(grid->r.size());
  p.du.reserve(grid->r.size());
  for (double r : grid->r) {
    p.u.push_back(u(r));
    p.du.push_back(du(r));
  }
  return p;
}

/// (r^2 - R^2)/2 scaled by a.
inline RadialProfile quadratic_profile(std::shared_ptr<const RadialGrid> grid, double a = 1.0) {
  const double R = grid->R();
  return sample_profile(
      grid, [&](double r) { return 0.5 * a * (r * r - R * R); }, [&](double r) { return a * r; });
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// Moments on cells and hat functions

/// int_a^b r^alpha dr for 0 <= a < b, alpha > -1.
inline double power_moment(double a, double b, double alpha) {
  if (a == 0.0) return std::pow(b, alpha + 1.0) / (alpha + 1.0);
  if (std::abs(alpha + 1.0) < 1e-300) return std::log(b / a);
  return std::pow(a, alpha + 1.0) * std::expm1((alpha + 1.0) * std::log1p((b - a) / a)) / (alpha + 1.0);
}

/// Integrals of r^alpha against the two linear shape functions of [a, b]:
/// first = int (b-r)/h r^alpha, second = int (r-a)/h r^alpha.
inline std::pair<double, double> hat_parts(double a, double b, double alpha) {
  const double h = b - a;
  if (a < 2.0 * h) {
    const double m0 = power_moment(a, b, alpha), m1 = power_moment(a, b, alpha + 1.0);
    const double right = (m1 - a * m0) / h;
    return {m0 - right, right};
  }
  static const GaussRule rule = gauss_legendre(12);
  double lo = 0.0, hi = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = 0.5 * (1.0 + rule.nodes[q]);
    const double w = 0.5 * rule.weights[q] * h * std::pow(a + h * t, alpha);
    lo += w * (1.0 - t);
    hi += w * t;
  }
  return {lo, hi};
}

/// H_i = int hat_i(r) r^alpha dr for every node.
inline std::vector<double> hat_moments(const RadialGrid& g, double alpha) {
  if (!(alpha > -1.0)) throw InvalidInput("hat_moments: need alpha > -1");
  std::vector<double> H(g.r.size(), 0.0);
  for (int c = 0; c < g.N(); ++c) {
    const auto [lo, hi] = hat_parts(g.r[c], g.r[c + 1], alpha);
    H[c] += lo;
    H[c + 1] += hi;
  }
  return H;
}

/// int hat_i(r) w(r) dr for a smooth weight, 8-point Gauss per cell.
template <class W>
std::vector<double> hat_integrals(const RadialGrid& g, W&& w) {
  static const GaussRule rule = gauss_legendre(8);
  std::vector<double> H(g.r.size(), 0.0);
  for (int c = 0; c < g.N(); ++c) {
    const double a = g.r[c], h = g.h(c);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = 0.5 * (1.0 + rule.nodes[q]);
      const double v = 0.5 * rule.weights[q] * h * w(a + h * t);
      H[c] += v * (1.0 - t);
      H[c + 1] += v * t;
    }
  }
  return H;
}

// ---------------------------------------------------------------------------
// Discrete divergence form
//
// The energy is I_h(u) = c sum_cells W_c g_c^{k+1} with g_c the cell slope,
// W_c = int_cell r^{n-k} and c = (omega_n/k) C(n-1,k-1). Its gradient is a
// difference of fluxes F_c = A_c g_c^k, A_c = c W_c / h_c, and the nodal
// k-Hessian is S_i = (F_{i+1/2} - F_{i-1/2}) / V_i with V_i = omega_n H_i(n-1).

class DivergenceForm {
 public:
  DivergenceForm(const ProblemParams& p, std::shared_ptr<const RadialGrid> grid)
      : p_(p), grid_(std::move(grid)) {
    p_.validate();
    if (!grid_) throw InvalidInput("DivergenceForm: null grid");
    const int N = grid_->N();
    omega_ = sphere_area(p_.n);
    c_ = omega_ / p_.k * binomial(p_.n - 1, p_.k - 1);
    W_.resize(N);
    A_.resize(N);
    for (int c = 0; c < N; ++c) {
      W_[c] = power_moment(grid_->r[c], grid_->r[c + 1], p_.n - p_.k);
      A_[c] = c_ * W_[c] / grid_->h(c);
    }
    V_ = hat_moments(*grid_, p_.n - 1.0);
    for (double& v : V_) v *= omega_;
  }

  const ProblemParams& params() const { return p_; }
  const RadialGrid& grid() const { return *grid_; }
  std::shared_ptr<const RadialGrid> grid_ptr() const { return grid_; }
  int N() const { return grid_->N(); }
  double omega() const { return omega_; }
  double energy_constant() const { return c_; }
  std::span<const double> conductance() const { return A_; }
  std::span<const double> volumes() const { return V_; }

  std::vector<double> slopes(std::span<const double> u) const {
    check_size(u);
    std::vector<double> g(N());
    for (int c = 0; c < N(); ++c) g[c] = (u[c + 1] - u[c]) / grid_->h(c);
    return g;
  }

  std::vector<double> fluxes(std::span<const double> u) const {
    auto g = slopes(u);
    for (int c = 0; c < N(); ++c) g[c] = A_[c] * std::pow(g[c], p_.k);
    return g;
  }

  double energy(std::span<const double> u) const {
    const auto g = slopes(u);
    double e = 0.0;
    for (int c = 0; c < N(); ++c) e += W_[c] * std::pow(g[c], p_.k + 1);
    return c_ * e;
  }

  /// S_k at nodes 0..N-1.
  std::vector<double> nodal_sk(std::span<const double> u) const {
    const auto F = fluxes(u);
    std::vector<double> S(N());
    double prev = 0.0;
    for (int i = 0; i < N(); ++i) {
      S[i] = (F[i] - prev) / V_[i];
      prev = F[i];
    }
    return S;
  }

  /// Hessian spectrum at node i < N reconstructed from S_i and the averaged slope.
  EigenTuple nodal_eigs(std::span<const double> slopes, double S, int i) const {
    const int n = p_.n, k = p_.k;
    if (i == 0) {
      const double lam = std::pow(std::max(S, 0.0) / binomial(n, k), 1.0 / k);
      return radial_hessian_eigs(n, S >= 0.0 ? lam : -std::pow(-S / binomial(n, k), 1.0 / k), lam);
    }
    const double t = 0.5 * (slopes[i - 1] + slopes[i]) / grid_->r[i];
    double u2;
    if (k == 1)
      u2 = S - (n - 1) * t;
    else
      u2 = (S - binomial(n - 1, k) * std::pow(t, k)) / (binomial(n - 1, k - 1) * std::pow(t, k - 1));
    return radial_hessian_eigs(n, u2, t);
  }

  /// All cell slopes positive and every node 0..N-1 in Gamma_k.
  bool admissible(std::span<const double> u, double margin = 0.0) const {
    const auto g = slopes(u);
    for (double x : g)
      if (!(x > 0.0)) return false;
    const auto S = nodal_sk(u);
    const ConeLevel level(p_.k);
    for (int i = 0; i < N(); ++i) {
      if (!(S[i] > 0.0)) return false;
      if (!in_gamma_k(level, nodal_eigs(g, S[i], i), margin)) return false;
    }
    return true;
  }

  /// Solve F_{i+1/2} - F_{i-1/2} = loads_i with u_N = 0. Loads must have
  /// nonnegative partial sums.
  std::vector<double> solve_dirichlet(std::span<const double> loads) const {
    if (static_cast<int>(loads.size()) < N()) throw InvalidInput("solve_dirichlet: size mismatch");
    std::vector<double> g(N());
    double Q = 0.0;
    for (int c = 0; c < N(); ++c) {
      Q += loads[c];
      if (Q < 0.0) throw NumericalFailure("solve_dirichlet: negative cumulative load");
      g[c] = std::pow(Q / A_[c], 1.0 / p_.k);
    }
    std::vector<double> u(N() + 1, 0.0);
    for (int c = N() - 1; c >= 0; --c) u[c] = u[c + 1] - g[c] * grid_->h(c);
    return u;
  }

 private:
  void check_size(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != N() + 1) throw InvalidInput("profile/grid size mismatch");
  }

  ProblemParams p_;
  std::shared_ptr<const RadialGrid> grid_;
  double omega_ = 0.0;
  double c_ = 0.0;
  std::vector<double> W_, A_, V_;
};

// ---------------------------------------------------------------------------
// Functionals

struct QuotientReport {
  double energy = 0.0;
  double wnorm = 0.0;
  double quotient = 0.0;
  double kstar = 0.0;
};

inline void require_admissible_shape(const RadialProfile& prof, const char* who) {
  const auto& u = prof.u;
  const double scale = std::max(max_abs(u), 1e-300);
  if (std::abs(u.back()) > 1e-10 * scale)
    throw DomainError(std::string(who) + ": profile violates u(R) = 0");
  for (std::size_t i = 0; i + 1 < u.size(); ++i)
    if (u[i + 1] - u[i] < -1e-14 * scale)
      throw DomainError(std::string(who) + ": profile is not nondecreasing in r");
}

inline double hessian_energy(const ProblemParams& p, const RadialProfile& prof) {
  require_admissible_shape(prof, "hessian_energy");
  return DivergenceForm(p, prof.grid).energy(prof.u);
}

/// (omega_n int r^{n-1+sigma} |u|^p dr)^{1/p} by hat product integration.
inline double weighted_norm(const ProblemParams& params, const RadialProfile& prof, double p,
                            double sigma) {
  params.validate();
  if (!(p >= 1.0)) throw InvalidInput("weighted_norm: p must be >= 1");
  if (!(sigma > -params.n)) throw InvalidInput("weighted_norm: weight not integrable (sigma <= -n)");
  const auto H = hat_moments(prof.g(), params.n - 1.0 + sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i) acc += H[i] * std::pow(std::abs(prof.u[i]), p);
  return std::pow(sphere_area(params.n) * acc, 1.0 / p);
}

/// wnorm / energy^{1/(k+1)} with the weighted L^{k*} norm, weight |x|^{2sk}.
inline QuotientReport ball_quotient(const ProblemParams& p, const RadialProfile& prof) {
  const auto ks = critical_exponent(p);
  if (!ks.finite()) throw InvalidInput("ball_quotient: k* is infinite");
  QuotientReport q;
  q.kstar = ks.value;
  q.energy = hessian_energy(p, prof);
  q.wnorm = weighted_norm(p, prof, ks.value, 2.0 * p.s * p.k);
  q.quotient = q.energy > 0.0 ? q.wnorm / std::pow(q.energy, 1.0 / (p.k + 1)) : 0.0;
  return q;
}

/// Relative gap between omega_n int (-u) S_k r^{n-1} dr, with S_k evaluated
/// pointwise from du and its finite-difference derivative, and hessian_energy.
inline double energy_by_parts_check(const ProblemParams& p, const RadialProfile& prof) {
  p.validate();
  const double I = hessian_energy(p, prof);
  const auto& g = prof.g();
  const auto u2 = differentiate(g, prof.du, Parity::Odd);
  const auto H = hat_moments(g, p.n - 1.0);
  double direct = 0.0;
  for (int i = 0; i <= g.N(); ++i)
    direct += H[i] * (-prof.u[i]) * radial_sk(p, prof.du[i], u2[i], g.r[i]);
  direct *= sphere_area(p.n);
  if (I == 0.0) return direct == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(direct - I) / std::abs(I);
}

inline double moser_trudinger_alpha(int n, int k) {
  return n * std::pow(sphere_area(n) / k * binomial(n - 1, k - 1), 2.0 / n);
}

/// int_Omega exp[alpha_n (|u| / ||u||)^{(n+2)/n}] dx for 2k = n.
inline double mt_functional(const ProblemParams& p, const RadialProfile& prof) {
  p.validate();
  if (2 * p.k != p.n) throw InvalidInput("mt_functional: requires 2k = n");
  const double I = hessian_energy(p, prof);
  if (!(I > 0.0)) throw InvalidInput("mt_functional: zero profile has zero norm");
  const double norm = std::pow(I, 1.0 / (p.k + 1));
  const double alpha = moser_trudinger_alpha(p.n, p.k);
  const double e = (p.n + 2.0) / p.n;
  const auto H = hat_moments(prof.g(), p.n - 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < H.size(); ++i)
    acc += H[i] * std::exp(alpha * std::pow(std::abs(prof.u[i]) / norm, e));
  return sphere_area(p.n) * acc;
}

}  // namespace hessvar

#endif  // HESSVAR_RADIAL_CALCULUS_HPP
