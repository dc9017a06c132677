#ifndef HESSVAR_SPECTRAL_HPP
#define HESSVAR_SPECTRAL_HPP

// Principal eigenpair of S_k(D^2 u) = lambda |x|^{2sk} |u|^k on a ball,
// normalized by int |x|^{2sk} |u|^{k+1} = 1.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/radial_calculus.hpp"

namespace hessvar {

struct EigenIterate {
  int iteration = 0;
  double lambda = 0.0;
  double residual = 0.0;
};

struct EigenResult {
  double lambda1 = 0.0;
  RadialProfile phi1;
  int iterations = 0;
  double residual = 0.0;
  std::vector<EigenIterate> history;
};

namespace detail {

// omega_n H_i(n-1+2sk): the eigen weight tested against hat functions.
inline std::vector<double> eigen_loads(const DivergenceForm& form) {
  const auto& p = form.params();
  auto L = hat_moments(form.grid(), p.n - 1.0 + 2.0 * p.s * p.k);
  for (double& x : L) x *= form.omega();
  return L;
}

inline double eigen_mass(std::span<const double> L, std::span<const double> u, int k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += L[i] * std::pow(std::abs(u[i]), k + 1);
  return acc;
}

}  // namespace detail

/// I_k(u) / int |x|^{2sk} |u|^{k+1}.
inline double rayleigh(const ProblemParams& p, const RadialProfile& prof) {
  DivergenceForm form(p, prof.grid);
  const auto L = detail::eigen_loads(form);
  const double D = detail::eigen_mass(L, prof.u, p.k);
  if (!(D > 0.0)) throw InvalidInput("rayleigh: zero profile");
  require_admissible_shape(prof, "rayleigh");
  return form.energy(prof.u) / D;
}

/// Relative residual sqrt(sum V (S - lambda psi)^2) / sqrt(sum V (lambda psi)^2).
inline double eigen_residual(const DivergenceForm& form, std::span<const double> L, std::span<const double> u,
                             double lambda) {
  const int k = form.params().k;
  const auto S = form.nodal_sk(u);
  const auto V = form.volumes();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double rhs = lambda * L[i] * std::pow(std::abs(u[i]), k) / V[i];
    num += V[i] * (S[i] - rhs) * (S[i] - rhs);
    den += V[i] * rhs * rhs;
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Inverse iteration: solve div(r^{n-k} u'^k) = rhs(u_m) by direct double
/// integration, renormalize, and take the Rayleigh quotient.
inline EigenResult inverse_iteration(const ProblemParams& p, const RadialProfile& init, double tol = 1e-10,
                                     int max_iter = 500) {
  p.validate_solver();
  if (!(tol > 0.0)) throw InvalidInput("inverse_iteration: tol must be > 0");
  DivergenceForm form(p, init.grid);
  const auto L = detail::eigen_loads(form);
  const int N = form.N();
  const int k = p.k;

  std::vector<double> u = init.u;
  u.back() = 0.0;
  for (int i = 0; i < N; ++i)
    if (u[i] > 0.0) throw InvalidInput("inverse_iteration: init must be nonpositive");
  double D = detail::eigen_mass(L, u, k);
  if (!(D > 0.0)) throw InvalidInput("inverse_iteration: zero init");

  EigenResult res;
  double prev = std::numeric_limits<double>::infinity();
  std::vector<double> loads(N);
  for (int it = 1; it <= max_iter; ++it) {
    for (int i = 0; i < N; ++i) loads[i] = L[i] * std::pow(std::abs(u[i]), k);
    u = form.solve_dirichlet(loads);
    D = detail::eigen_mass(L, u, k);
    const double s = std::pow(D, -1.0 / (k + 1));
    for (double& x : u) x *= s;
    const double lambda = form.energy(u);
    const double r = eigen_residual(form, L, u, lambda);
    res.history.push_back({it, lambda, r});
    if (std::abs(lambda - prev) <= tol * lambda && r <= tol) {
      res.lambda1 = lambda;
      res.iterations = it;
      res.residual = r;
      res.phi1 = make_profile(init.grid, u);
      return res;
    }
    prev = lambda;
  }
  throw NumericalFailure("inverse_iteration: no convergence in " + std::to_string(max_iter) + " iterations");
}

inline EigenResult principal_eigenpair(const ProblemParams& p, int N, double tol = 1e-10) {
  const auto g = make_grid(p, N);
  return inverse_iteration(p, quadratic_profile(g), tol);
}

}  // namespace hessvar

#endif  // HESSVAR_SPECTRAL_HPP
