#ifndef HESSVAR_NONLINEARITY_HPP
#define HESSVAR_NONLINEARITY_HPP

// Right-hand sides psi(x, u) = weight(|x|) f(u) and their primitives
// F(z) = int_z^0 f.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/quadrature.hpp"
#include "hessvar/radial_calculus.hpp"

namespace hessvar {

/// |x|^sigma, or (|x|^2 + delta^2)^{sigma/2} when delta > 0. A tabulated
/// weight (one value per node) overrides both.
struct Weight {
  double sigma = 0.0;
  double delta = 0.0;
  std::vector<double> nodal;

  double operator()(double r) const {
    if (sigma == 0.0) return 1.0;
    if (delta > 0.0) return std::pow(r * r + delta * delta, 0.5 * sigma);
    return std::pow(r, sigma);
  }
  bool tabulated() const { return !nodal.empty(); }
};

struct SourceTerm;

struct ConstantSource {
  double c = 1.0;
};

/// coef |z|^p for z < 0, zero for z >= 0.
struct PowerSource {
  double coef = 1.0;
  double p = 1.0;
};

/// The three-branch mollified critical power in |z|, joined by monotone
/// cubic blends on (delta, 2 delta) and (M, M + eps).
struct MollifiedSource {
  double delta = 0.05;
  double eps = 0.01;
  double M = 50.0;
  double e = 1.0;  // k* - 1
};

/// base for z >= -m, d_m |z|^p below with d_m = m^{-p} base(-m).
struct CappedSource {
  double m = 10.0;
  double p = 2.0;
  std::shared_ptr<const SourceTerm> base;
};

/// f^{1/k} = fhat^{1/k} + 1/m with fhat = base on |z| <= m, frozen at
/// base(-2m) for |z| >= 2m.
struct RegularizedSource {
  double m = 10.0;
  int k = 1;
  std::shared_ptr<const SourceTerm> base;
};

struct SourceTerm {
  std::variant<ConstantSource, PowerSource, MollifiedSource, CappedSource, RegularizedSource> v;
};

namespace detail {

// Cubic Hermite on [x0, x1] with Fritsch-Carlson limited slopes.
struct HermiteBlend {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 0, m0 = 0, m1 = 0;

  static HermiteBlend make(double x0, double x1, double y0, double y1, double m0, double m1) {
    const double d = (y1 - y0) / (x1 - x0);
    if (d == 0.0) {
      m0 = m1 = 0.0;
    } else {
      if (m0 * d < 0.0) m0 = 0.0;
      if (m1 * d < 0.0) m1 = 0.0;
      const double a = m0 / d, b = m1 / d, s2 = a * a + b * b;
      if (s2 > 9.0) {
        const double t = 3.0 / std::sqrt(s2);
        m0 = t * a * d;
        m1 = t * b * d;
      }
    }
    return {x0, x1, y0, y1, m0, m1};
  }

  double value(double x) const {
    const double h = x1 - x0, t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * m1;
  }

  // int_{x0}^{x} value, exact for the cubic by 2-point Gauss.
  double integral(double x) const {
    const double a = x0, half = 0.5 * (x - a), mid = 0.5 * (x + a);
    const double q = half / std::sqrt(3.0);
    return half * (value(mid - q) + value(mid + q));
  }
};

inline HermiteBlend mollified_low(const MollifiedSource& s) {
  const double d = s.delta;
  return HermiteBlend::make(d, 2 * d, std::pow(d, s.e), std::pow(2 * d, s.e), 0.0,
                            s.e * std::pow(2 * d, s.e - 1));
}

inline HermiteBlend mollified_high(const MollifiedSource& s) {
  const double a = s.M, b = s.M + s.eps;
  return HermiteBlend::make(a, b, std::pow(a, s.e), s.eps / (b * b), 0.0, -2.0 * s.eps / (b * b * b));
}

inline double mollified_value(const MollifiedSource& s, double t) {
  t = std::abs(t);
  if (t <= s.delta) return std::pow(s.delta, s.e);
  if (t < 2 * s.delta) return mollified_low(s).value(t);
  if (t <= s.M) return std::pow(t, s.e);
  if (t < s.M + s.eps) return mollified_high(s).value(t);
  return s.eps / (t * t);
}

// int_0^t f for t >= 0.
inline double mollified_primitive(const MollifiedSource& s, double t) {
  const double d = s.delta;
  if (t <= d) return std::pow(d, s.e) * t;
  double acc = std::pow(d, s.e + 1);
  const auto lo = mollified_low(s);
  if (t < 2 * d) return acc + lo.integral(t);
  acc += lo.integral(2 * d);
  if (t <= s.M) return acc + (std::pow(t, s.e + 1) - std::pow(2 * d, s.e + 1)) / (s.e + 1);
  acc += (std::pow(s.M, s.e + 1) - std::pow(2 * d, s.e + 1)) / (s.e + 1);
  const auto hi = mollified_high(s);
  if (t < s.M + s.eps) return acc + hi.integral(t);
  acc += hi.integral(s.M + s.eps);
  return acc + s.eps * (1.0 / (s.M + s.eps) - 1.0 / t);
}

}  // namespace detail

double source_value(const SourceTerm& s, double z);
double source_primitive(const SourceTerm& s, double z);

namespace detail {

inline double regularized_hat(const RegularizedSource& s, double z) {
  const double m = s.m;
  if (z >= -m) return source_value(*s.base, z);
  const double a = -z;
  if (a >= 2 * m) return source_value(*s.base, -2 * m);
  const double tau = (a - m) / m;
  const double b = tau + tau * tau - tau * tau * tau;
  return source_value(*s.base, -(m + m * b));
}

inline double regularized_value(const RegularizedSource& s, double z) {
  const double h = std::max(regularized_hat(s, z), 0.0);
  return std::pow(std::pow(h, 1.0 / s.k) + 1.0 / s.m, s.k);
}

// int_z^0 of the regularized source for -m <= z <= 0 when the base is a power.
inline double regularized_power_primitive(const RegularizedSource& s, const PowerSource& b, double z) {
  const double a = -z;
  double acc = 0.0;
  for (int j = 0; j <= s.k; ++j) {
    const double e = b.p * j / s.k + 1.0;
    acc += binomial(s.k, j) * std::pow(b.coef, static_cast<double>(j) / s.k) *
           std::pow(s.m, static_cast<double>(j - s.k)) * std::pow(a, e) / e;
  }
  return acc;
}

inline double regularized_primitive(const RegularizedSource& s, double z) {
  const double m = s.m;
  if (z >= 0.0) return -std::pow(1.0 / m, s.k) * z;
  static const GaussRule rule = gauss_legendre(24);
  auto f = [&](double t) { return regularized_value(s, t); };
  const double inner = std::max(z, -m);
  double acc;
  if (const auto* pw = std::get_if<PowerSource>(&s.base->v))
    acc = regularized_power_primitive(s, *pw, inner);
  else
    acc = integrate_gauss(rule, inner, 0.0, f);
  if (z >= -m) return acc;
  acc += integrate_gauss(rule, std::max(z, -2 * m), -m, f);
  if (z >= -2 * m) return acc;
  return acc + f(-2 * m - 1.0) * (-2 * m - z);
}

}  // namespace detail

inline double source_value(const SourceTerm& s, double z) {
  return std::visit(
      [z](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ConstantSource>) {
          return t.c;
        } else if constexpr (std::is_same_v<T, PowerSource>) {
          return z < 0.0 ? t.coef * std::pow(-z, t.p) : 0.0;
        } else if constexpr (std::is_same_v<T, MollifiedSource>) {
          return detail::mollified_value(t, z);
        } else if constexpr (std::is_same_v<T, CappedSource>) {
          if (z >= -t.m) return source_value(*t.base, z);
          const double dm = std::pow(t.m, -t.p) * source_value(*t.base, -t.m);
          return dm * std::pow(-z, t.p);
        } else {
          return detail::regularized_value(t, z);
        }
      },
      s.v);
}

/// F(z) = int_z^0 f(tau) dtau.
inline double source_primitive(const SourceTerm& s, double z) {
  return std::visit(
      [z](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ConstantSource>) {
          return -t.c * z;
        } else if constexpr (std::is_same_v<T, PowerSource>) {
          return z < 0.0 ? t.coef * std::pow(-z, t.p + 1.0) / (t.p + 1.0) : 0.0;
        } else if constexpr (std::is_same_v<T, MollifiedSource>) {
          const double v = detail::mollified_primitive(t, std::abs(z));
          return z <= 0.0 ? v : -v;
        } else if constexpr (std::is_same_v<T, CappedSource>) {
          if (z >= -t.m) return source_primitive(*t.base, z);
          const double dm = std::pow(t.m, -t.p) * source_value(*t.base, -t.m);
          return source_primitive(*t.base, -t.m) +
                 dm * (std::pow(-z, t.p + 1.0) - std::pow(t.m, t.p + 1.0)) / (t.p + 1.0);
        } else {
          return detail::regularized_primitive(t, z);
        }
      },
      s.v);
}

/// df/dz; analytic for constants and powers, central differences otherwise.
inline double source_derivative(const SourceTerm& s, double z) {
  if (std::holds_alternative<ConstantSource>(s.v)) return 0.0;
  if (const auto* p = std::get_if<PowerSource>(&s.v))
    return z < 0.0 ? -p->coef * p->p * std::pow(-z, p->p - 1.0) : 0.0;
  const double h = 1e-6 * std::max(1.0, std::abs(z));
  return (source_value(s, z + h) - source_value(s, z - h)) / (2.0 * h);
}

inline std::string source_kind(const SourceTerm& s) {
  static const char* names[] = {"constant", "power", "mollified", "capped", "regularized"};
  return names[s.v.index()];
}

/// psi(x, u) = weight(|x|) f(u).
struct Nonlinearity {
  Weight weight;
  SourceTerm source{ConstantSource{}};

  double f(double z) const { return source_value(source, z); }
  double df(double z) const { return source_derivative(source, z); }
  double F(double z) const { return source_primitive(source, z); }
  std::string kind() const { return source_kind(source); }

  /// L_i = omega_n int hat_i r^{n-1} weight(r) dr at every node.
  std::vector<double> loads(const DivergenceForm& form) const {
    const auto& g = form.grid();
    const int n = form.params().n;
    std::vector<double> L;
    if (weight.tabulated()) {
      if (weight.nodal.size() < g.r.size() - 1)
        throw InvalidInput("tabulated weight has fewer values than grid nodes");
      L.assign(g.r.size(), 0.0);
      for (std::size_t i = 0; i + 1 < g.r.size(); ++i) L[i] = form.volumes()[i] * weight.nodal[i];
      return L;
    }
    if (weight.delta > 0.0) {
      L = hat_integrals(g, [&](double r) { return std::pow(r, n - 1) * weight(r); });
    } else {
      if (!(n - 1 + weight.sigma > -1.0)) throw InvalidInput("weight not integrable at the origin");
      L = hat_moments(g, n - 1 + weight.sigma);
    }
    for (double& x : L) x *= form.omega();
    return L;
  }

  /// Pointwise weight at node i (tabulated values take precedence).
  double weight_at(const RadialGrid& g, int i) const {
    if (weight.tabulated()) return weight.nodal[i];
    return weight(g.r[i]);
  }
};

inline Nonlinearity constant_nl(double c) { return {Weight{}, SourceTerm{ConstantSource{c}}}; }

inline Nonlinearity power_nl(double p, double sigma = 0.0, double coef = 1.0) {
  return {Weight{sigma, 0.0, {}}, SourceTerm{PowerSource{coef, p}}};
}

/// lambda |x|^{2sk} |u|^k.
inline Nonlinearity eigen_nl(const ProblemParams& params, double lambda) {
  return power_nl(params.k, 2.0 * params.s * params.k, lambda);
}

/// (|x|^2 + delta^2)^{sk} times the mollified critical power.
inline Nonlinearity mollified_nl(const ProblemParams& params, double delta, double eps, double M) {
  const auto ks = critical_exponent(params);
  if (!ks.finite()) throw InvalidInput("mollified nonlinearity needs finite k*");
  if (!(delta > 0.0 && eps > 0.0 && M > 2 * delta))
    throw InvalidInput("mollified nonlinearity needs delta, eps > 0 and M > 2 delta");
  return {Weight{2.0 * params.s * params.k, delta, {}},
          SourceTerm{MollifiedSource{delta, eps, M, ks.value - 1.0}}};
}

inline Nonlinearity capped_nl(const Nonlinearity& base, double m, double p) {
  if (!(m > 0.0)) throw InvalidInput("capped nonlinearity needs m > 0");
  return {base.weight, SourceTerm{CappedSource{m, p, std::make_shared<SourceTerm>(base.source)}}};
}

/// Regularization at level m with the weight mollified at 1/m.
inline Nonlinearity regularized_nl(const Nonlinearity& base, double m, int k) {
  if (!(m > 0.0)) throw InvalidInput("regularized nonlinearity needs m > 0");
  Weight w = base.weight;
  if (w.sigma != 0.0 && !w.tabulated()) w.delta = 1.0 / m;
  return {w, SourceTerm{RegularizedSource{m, k, std::make_shared<SourceTerm>(base.source)}}};
}

/// Constant source against a frozen nodal weight: psi_i = values[i].
inline Nonlinearity frozen_nl(std::vector<double> values) {
  return {Weight{0.0, 0.0, std::move(values)}, SourceTerm{ConstantSource{1.0}}};
}

}  // namespace hessvar

#endif  // HESSVAR_NONLINEARITY_HPP
