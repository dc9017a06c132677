#ifndef HESSVAR_QUADRATURE_HPP
#define HESSVAR_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "hessvar/errors.hpp"

namespace hessvar {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule by Newton iteration on P_m.
inline GaussRule gauss_legendre(int m) {
  if (m < 1) throw InvalidInput("gauss_legendre: m must be >= 1");
  GaussRule rule;
  rule.nodes.assign(static_cast<std::size_t>(m), 0.0);
  rule.weights.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= m; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = (m == 1) ? 1.0 : m * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[m - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[m - 1 - i] = w;
  }
  return rule;
}

/// Integrate fn over [a, b] with a fixed rule.
template <class Fn>
double integrate_gauss(const GaussRule& rule, double a, double b, Fn&& fn) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    acc += rule.weights[q] * fn(mid + half * rule.nodes[q]);
  return acc * half;
}

struct QuadConfig {
  double panel_width = 0.25;  // in log r
  int points = 20;
  double tail_rel = 1e-8;
  double log_budget = 700.0;  // |log r| limit for truncation radii
};

/// int_{r_lo}^{r_hi} g(r) dr in x = log r with Gauss panels.
template <class G>
double log_panel_integral(G&& g, double r_lo, double r_hi, const QuadConfig& cfg) {
  static thread_local GaussRule rule;
  if (static_cast<int>(rule.nodes.size()) != cfg.points) rule = gauss_legendre(cfg.points);
  const double x0 = std::log(r_lo), x1 = std::log(r_hi);
  const int panels = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cfg.panel_width)));
  const double w = (x1 - x0) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = x0 + p * w;
    acc += integrate_gauss(rule, a, a + w, [&](double x) {
      const double r = std::exp(x);
      return g(r) * r;
    });
  }
  return acc;
}

}  // namespace hessvar

#endif  // HESSVAR_QUADRATURE_HPP
