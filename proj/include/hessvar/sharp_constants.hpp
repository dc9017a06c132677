#ifndef HESSVAR_SHARP_CONSTANTS_HPP
#define HESSVAR_SHARP_CONSTANTS_HPP

// Bliss extremals -(lambda + r^{2(s+1)})^{(2k-n)/(2k(s+1))}, the sharp
// Hardy-Sobolev quotient on R^n, and probes of its extremality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/hessian_core.hpp"
#include "hessvar/quadrature.hpp"
#include "hessvar/radial_calculus.hpp"

namespace hessvar {

struct ExtremalSpec {
  ProblemParams params;
  double lambda = 1.0;

  void validate() const {
    params.validate();
    if (2 * params.k >= params.n) throw InvalidInput("extremal requires 2k < n");
    if (!(params.s > -1.0 && params.s <= 0.0)) throw InvalidInput("extremal requires -1 < s <= 0");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("extremal requires lambda > 0");
  }

  double beta() const { return 2.0 * (params.s + 1.0); }
  double decay() const { return (params.n - 2.0 * params.k) / (params.k * beta()); }

  double u(double r) const { return -std::pow(lambda + std::pow(r, beta()), -decay()); }
  double du(double r) const {
    if (r == 0.0) return 0.0;
    const double b = beta(), a = decay();
    return a * b * std::pow(r, b - 1.0) * std::pow(lambda + std::pow(r, b), -a - 1.0);
  }
};

/// Samples of the extremal and its analytic derivative; du(0) = 0 by symmetry.
inline RadialProfile extremal_profile(const ExtremalSpec& spec, std::shared_ptr<const RadialGrid> grid) {
  spec.validate();
  return sample_profile(
      grid, [&](double r) { return spec.u(r); }, [&](double r) { return spec.du(r); });
}

/// Radial function given by callables.
struct RadialFn {
  std::function<double(double)> u;
  std::function<double(double)> du;
};

struct WholeSpaceIntegrals {
  double energy = 0.0;     // (omega_n/k) C(n-1,k-1) int r^{n-k} u'^{k+1}
  double norm_pow = 0.0;   // omega_n int r^{n-1+2sk} |u|^{k*}
  double r_lo = 0.0;
  double r_hi = 0.0;
};

/// Energy and k*-th power of the weighted norm of a radial function over
/// [r_lo, r_hi].
inline WholeSpaceIntegrals radial_integrals(const ProblemParams& p, const RadialFn& f, double r_lo, double r_hi,
                                            const QuadConfig& cfg) {
  const auto ks = critical_exponent(p);
  const double c = sphere_area(p.n) / p.k * binomial(p.n - 1, p.k - 1);
  const double sig = p.n - 1.0 + 2.0 * p.s * p.k;
  WholeSpaceIntegrals out;
  out.r_lo = r_lo;
  out.r_hi = r_hi;
  out.energy = c * log_panel_integral(
                       [&](double r) { return std::pow(r, p.n - p.k) * std::pow(f.du(r), p.k + 1); }, r_lo, r_hi,
                       cfg);
  out.norm_pow = sphere_area(p.n) *
                 log_panel_integral([&](double r) { return std::pow(r, sig) * std::pow(std::abs(f.u(r)), ks.value); },
                                    r_lo, r_hi, cfg);
  return out;
}

namespace detail {

// Truncation radii for the extremal so that the analytic head and tail bounds
// are below tail_rel of a lower bound on the bulk.
inline std::pair<double, double> extremal_truncation(const ExtremalSpec& spec, const QuadConfig& cfg) {
  const auto& p = spec.params;
  const double n = p.n, k = p.k, s = p.s;
  const double b = spec.beta(), a = spec.decay(), ab = a * b;
  const double ks = critical_exponent(p).value;
  const double r0 = std::pow(spec.lambda, 1.0 / b);
  const double c = sphere_area(p.n) / k * binomial(p.n - 1, p.k - 1);
  const auto bulk = radial_integrals(p, {[&](double r) { return spec.u(r); }, [&](double r) { return spec.du(r); }},
                                     r0 * std::exp(-2.0), r0 * std::exp(2.0), cfg);
  const double te = cfg.tail_rel * bulk.energy / c, tn = cfg.tail_rel * bulk.norm_pow / sphere_area(p.n);

  // tail beyond R: energy (ab)^{k+1} R^{-(n-2k)/k} k/(n-2k); norm R^{-(n+2sk)/k} k/(n+2sk)
  const double logR_e = (std::log(std::pow(ab, k + 1) * k / (n - 2 * k)) - std::log(te)) * k / (n - 2 * k);
  const double logR_n = (std::log(k / (n + 2 * s * k)) - std::log(tn)) * k / (n + 2 * s * k);
  // head below r_lo
  const double e = n - k + (b - 1.0) * (k + 1);
  const double loge =
      (std::log(te * (e + 1)) - std::log(std::pow(ab, k + 1) * std::pow(spec.lambda, -(a + 1) * (k + 1)))) / (e + 1);
  const double logn = (std::log(tn * (n + 2 * s * k)) + a * ks * std::log(spec.lambda)) / (n + 2 * s * k);
  const double lo = std::min(loge, logn), hi = std::max({logR_e, logR_n, std::log(r0) + 2.0});
  if (!(std::abs(lo) < cfg.log_budget && std::abs(hi) < cfg.log_budget) || !std::isfinite(lo + hi))
    throw NumericalFailure("sharp_quotient: truncation radius exceeds budget");
  return {std::exp(std::min(lo, std::log(r0) - 2.0)), std::exp(hi)};
}

}  // namespace detail

/// C* = wnorm / energy^{1/(k+1)} of the extremal over truncated R^n.
inline QuotientReport sharp_quotient(const ExtremalSpec& spec, const QuadConfig& cfg = {}) {
  spec.validate();
  const auto [lo, hi] = detail::extremal_truncation(spec, cfg);
  const auto I = radial_integrals(spec.params,
                                  {[&](double r) { return spec.u(r); }, [&](double r) { return spec.du(r); }}, lo, hi,
                                  cfg);
  QuotientReport q;
  q.kstar = critical_exponent(spec.params).value;
  q.energy = I.energy;
  q.wnorm = std::pow(I.norm_pow, 1.0 / q.kstar);
  q.quotient = q.wnorm / std::pow(q.energy, 1.0 / (spec.params.k + 1));
  return q;
}

// ---------------------------------------------------------------------------
// Change of variables t = r^{-(n-2k)/k}

namespace detail {

inline std::vector<double> fd_nonuniform(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = x[1] - x[0], h2 = x[2] - x[1];
    d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const std::size_t m = n - 1;
    const double h1 = x[m] - x[m - 1], h2 = x[m - 1] - x[m - 2];
    d[m] = (2 * h1 + h2) / (h1 * (h1 + h2)) * f[m] - (h1 + h2) / (h1 * h2) * f[m - 1] +
           h1 / (h2 * (h1 + h2)) * f[m - 2];
  }
  return d;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) acc += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
  return acc;
}

}  // namespace detail

/// Both sides of the two substitution identities on [r_1, R], evaluated
/// independently in r and in t; returns the larger relative gap.
inline double bliss_change_of_variables_check(const ProblemParams& p, const RadialProfile& prof) {
  p.validate();
  if (2 * p.k >= p.n) throw InvalidInput("change of variables requires 2k < n");
  const double k = p.k, b = (p.n - 2.0 * p.k) / p.k;
  const double ks = critical_exponent(p).value;
  const auto& g = prof.g();
  const std::size_t M = g.r.size() - 1;

  std::vector<double> r(g.r.begin() + 1, g.r.end()), u(prof.u.begin() + 1, prof.u.end());
  const auto ur = detail::fd_nonuniform(r, u);
  std::vector<double> fe(M), fn(M);
  for (std::size_t i = 0; i < M; ++i) {
    fe[i] = std::pow(r[i], p.n - k) * std::pow(std::abs(ur[i]), k + 1);
    fn[i] = std::pow(r[i], p.n - 1.0 + 2.0 * p.s * k) * std::pow(std::abs(u[i]), ks);
  }
  const double lhs_e = detail::trapezoid(r, fe), lhs_n = detail::trapezoid(r, fn);

  std::vector<double> t(M), v(M);
  for (std::size_t i = 0; i < M; ++i) {
    t[i] = std::pow(r[M - 1 - i], -b);
    v[i] = u[M - 1 - i];
  }
  const auto vt = detail::fd_nonuniform(t, v);
  const double q = -ks * k / (k + 1.0) - 1.0;
  std::vector<double> ge(M), gn(M);
  for (std::size_t i = 0; i < M; ++i) {
    ge[i] = std::pow(std::abs(vt[i]), k + 1);
    gn[i] = std::pow(t[i], q) * std::pow(std::abs(v[i]), ks);
  }
  const double rhs_e = std::pow(b, k) * detail::trapezoid(t, ge), rhs_n = detail::trapezoid(t, gn) / b;

  auto rel = [](double x, double y) {
    if (x == 0.0 && y == 0.0) return 0.0;
    return std::abs(x - y) / std::max(std::abs(x), std::abs(y));
  };
  return std::max(rel(lhs_e, rhs_e), rel(lhs_n, rhs_n));
}

// ---------------------------------------------------------------------------
// Maximality probe

struct PerturbationFailure {
  int sample = 0;
  std::string reason;
};

struct MaximalityReport {
  double cstar = 0.0;
  double max_quotient = 0.0;
  double max_ratio = 0.0;  // max_quotient / cstar
  std::vector<double> quotients;
  std::vector<double> amplitudes;
  std::vector<PerturbationFailure> failures;
};

namespace detail {

// Uniform [0, 1) from the top 53 bits; fixed across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Bumps {
  std::vector<double> c, x, w;

  double operator()(double lx) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double z = (lx - x[j]) / w[j];
      acc += c[j] * std::exp(-0.5 * z * z);
    }
    return acc;
  }
};

}  // namespace detail

/// Random smooth perturbations u'(1 + A xi(log r)) of the extremal, each
/// checked for u' > 0 and monotone r^{n-k} u'^k; quotients must stay below C*.
inline MaximalityReport maximality_probe(const ExtremalSpec& spec, int n_perturb, double amplitude,
                                         std::uint64_t seed, const QuadConfig& cfg = {}) {
  spec.validate();
  const auto& p = spec.params;
  MaximalityReport rep;
  rep.cstar = sharp_quotient(spec, cfg).quotient;
  const auto [lo, hi] = detail::extremal_truncation(spec, cfg);
  const double xc = std::log(std::pow(spec.lambda, 1.0 / spec.beta()));
  const GaussRule rule = gauss_legendre(cfg.points);
  const double ks = critical_exponent(p).value;
  const double c = sphere_area(p.n) / p.k * binomial(p.n - 1, p.k - 1);
  const double sig = p.n - 1.0 + 2.0 * p.s * p.k;

  const double x0 = std::log(lo), x1 = std::log(hi);
  const int panels = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cfg.panel_width)));
  const double pw = (x1 - x0) / panels;

  std::mt19937_64 rng(seed);
  for (int smp = 0; smp < n_perturb; ++smp) {
    detail::Bumps xi;
    for (int j = 0; j < 3; ++j) {
      xi.c.push_back(2.0 * detail::unit_uniform(rng) - 1.0);
      xi.x.push_back(xc + 6.0 * detail::unit_uniform(rng) - 3.0);
      xi.w.push_back(0.3 + 1.2 * detail::unit_uniform(rng));
    }
    double A = amplitude;
    bool ok = false;
    double quotient = 0.0;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt, A *= 0.5) {
      auto dpert = [&](double r) { return spec.du(r) * (1.0 + A * xi(std::log(r))); };
      // int_r^{hi} of (u'_pert - u') in x, panel by panel from the outside in
      auto delta_int = [&](double xa, double xb) {
        return integrate_gauss(rule, xa, xb, [&](double x) {
          const double r = std::exp(x);
          return spec.du(r) * A * xi(x) * r;
        });
      };
      double energy = 0.0, norm = 0.0, outer = 0.0, m_prev = std::numeric_limits<double>::infinity();
      bool admissible = true;
      std::string reason;
      for (int pi = panels - 1; pi >= 0 && admissible; --pi) {
        const double a = x0 + pi * pw, bb = a + pw;
        const double half = 0.5 * pw, mid = 0.5 * (a + bb);
        for (int q = static_cast<int>(rule.nodes.size()) - 1; q >= 0; --q) {
          const double x = mid + half * rule.nodes[q];
          const double r = std::exp(x);
          const double d = dpert(r);
          if (!(d > 0.0)) {
            admissible = false;
            reason = "u' <= 0";
            break;
          }
          const double m = std::pow(r, p.n - p.k) * std::pow(d, p.k);
          if (m > m_prev * (1.0 + 1e-12)) {
            admissible = false;
            reason = "r^{n-k} u'^k not monotone";
            break;
          }
          m_prev = m;
          const double up = spec.u(r) - (outer + delta_int(x, bb));
          const double w = half * rule.weights[q] * r;
          energy += w * std::pow(r, p.n - p.k) * std::pow(d, p.k + 1);
          norm += w * std::pow(r, sig) * std::pow(std::abs(up), ks);
        }
        outer += delta_int(a, bb);
      }
      if (!admissible) {
        if (attempt == 9) rep.failures.push_back({smp, reason});
        continue;
      }
      energy *= c;
      norm *= sphere_area(p.n);
      quotient = std::pow(norm, 1.0 / ks) / std::pow(energy, 1.0 / (p.k + 1));
      ok = true;
      rep.amplitudes.push_back(A);
    }
    if (ok) {
      rep.quotients.push_back(quotient);
      rep.max_quotient = std::max(rep.max_quotient, quotient);
    }
  }
  rep.max_ratio = rep.cstar > 0.0 ? rep.max_quotient / rep.cstar : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Step-2 structure

/// II(w) = (int |x|^{2sk} |w|^{k*})^{(k+1)/k*} along u + t(v - u); minimum
/// second difference over t in {0, 1/4, 1/2, 3/4, 1}.
inline double constraint_convexity_check(const ProblemParams& p, const RadialProfile& u, const RadialProfile& v) {
  const auto ks = critical_exponent(p);
  if (!ks.finite() || ks.value < p.k + 1.0) throw InvalidInput("convexity check requires k* >= k+1");
  if (u.u.size() != v.u.size()) throw InvalidInput("convexity check: profiles on different grids");
  std::vector<double> vals;
  for (int j = 0; j <= 4; ++j) {
    const double t = 0.25 * j;
    RadialProfile w{u.grid, u.u, {}};
    for (std::size_t i = 0; i < w.u.size(); ++i) w.u[i] = u.u[i] + t * (v.u[i] - u.u[i]);
    vals.push_back(std::pow(weighted_norm(p, w, ks.value, 2.0 * p.s * p.k), p.k + 1.0));
  }
  double m = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 3; ++j) m = std::min(m, vals[j - 1] - 2.0 * vals[j] + vals[j + 1]);
  return m;
}

struct MonotonicityReport {
  double R1 = 0.0, R2 = 0.0;
  double T1 = 0.0, T2 = 0.0;  // minimal T = energy / wnorm^{k+1} found on each ball
  double T_extremal1 = 0.0, T_extremal2 = 0.0;
  double T_poly1 = 0.0, T_poly2 = 0.0;
  bool at_edge1 = false, at_edge2 = false;  // extremal family minimum at the concentration edge
  double T_inf = 0.0;                       // 1 / C*^{k+1}
  bool converged = true;
};

namespace detail {

struct GoldenResult {
  double x = 0.0;
  double f = 0.0;
  bool converged = false;
};

template <class F>
GoldenResult golden_min(F&& f, double a, double b, double tol, int max_iter = 200) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(b - a) <= tol * (1.0 + std::abs(a) + std::abs(b))) {
      const double x = 0.5 * (a + b);
      return {x, f(x), true};
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return {0.5 * (a + b), std::min(fc, fd), false};
}

inline double ball_T(const ProblemParams& p, const RadialFn& f, double r_lo, double R, const QuadConfig& cfg) {
  const auto I = radial_integrals(p, f, r_lo, R, cfg);
  return I.energy / std::pow(I.norm_pow, (p.k + 1.0) / critical_exponent(p).value);
}

}  // namespace detail

/// Minimal quotient T on B_R1 and B_R2 over boundary-matched extremals and
/// the polynomial family (r^2 - R^2) + c (r^4 - R^4).
inline MonotonicityReport domain_monotonicity_probe(const ProblemParams& p, double R1, double R2,
                                                    const QuadConfig& cfg = {}) {
  p.validate_sharp();
  if (!(R1 > 0.0 && R1 <= R2)) throw InvalidInput("monotonicity probe requires 0 < R1 <= R2");
  MonotonicityReport rep;
  rep.R1 = R1;
  rep.R2 = R2;
  const double kk = p.k + 1.0;
  const bool hardy = p.s <= -1.0;
  if (!hardy) rep.T_inf = 1.0 / std::pow(sharp_quotient({p, 1.0}, cfg).quotient, kk);

  auto per_ball = [&](double R, double& Tex, double& Tpoly, bool& edge) {
    double best = std::numeric_limits<double>::infinity();
    if (!hardy) {
      const double b = 2.0 * (p.s + 1.0);
      const double lo = std::log(1e-8) + b * std::log(R), hi = std::log(1e2) + b * std::log(R);
      auto T_of = [&](double loglam) {
        ExtremalSpec e{p, std::exp(loglam)};
        const double uR = e.u(R);
        const double r_lo = std::pow(e.lambda, 1.0 / b) * 1e-6;
        return detail::ball_T(p, {[&](double r) { return e.u(r) - uR; }, [&](double r) { return e.du(r); }}, r_lo, R,
                              cfg);
      };
      const auto res = detail::golden_min(T_of, lo, hi, 1e-10);
      rep.converged = rep.converged && res.converged;
      Tex = res.f;
      edge = res.x - lo < 1e-3 * (hi - lo);
      best = std::min(best, Tex);
    }
    auto T_poly = [&](double c) {
      return detail::ball_T(p,
                            {[&](double r) { return (r * r - R * R) + c * (std::pow(r, 4) - std::pow(R, 4)); },
                             [&](double r) { return 2.0 * r + 4.0 * c * r * r * r; }},
                            R * 1e-8, R, cfg);
    };
    const auto resp = detail::golden_min([&](double lc) { return T_poly(std::exp(lc) / (R * R)); }, std::log(1e-4),
                                         std::log(1e3), 1e-10);
    rep.converged = rep.converged && resp.converged;
    Tpoly = resp.f;
    best = std::min(best, Tpoly);
    return best;
  };
  rep.T1 = per_ball(R1, rep.T_extremal1, rep.T_poly1, rep.at_edge1);
  rep.T2 = per_ball(R2, rep.T_extremal2, rep.T_poly2, rep.at_edge2);
  return rep;
}

// ---------------------------------------------------------------------------
// Hardy endpoint s = -1

struct HardyReport {
  std::vector<double> scales;
  std::vector<double> quotients;  // wnorm / energy^{1/(k+1)}
  double bound = 0.0;             // sharp 1-D Hardy bound on the quotient
};

/// Quotients of the concentrating family ((eps^2 + r^2)^{-a} - (eps^2 + 1)^{-a}),
/// a = (n-2k)/(2k), on B_1 at s = -1.
inline HardyReport hardy_endpoint_probe(const ProblemParams& p, const std::vector<double>& scales,
                                        const QuadConfig& cfg = {}) {
  ProblemParams q = p;
  q.s = -1.0;
  q.R = 1.0;
  q.validate_sharp();
  const double n = q.n, k = q.k;
  const double a = (n - 2 * k) / (2 * k);
  HardyReport rep;
  rep.scales = scales;
  rep.bound = (k + 1) / (n - 2 * k) * std::pow(k / binomial(q.n - 1, q.k - 1), 1.0 / (k + 1));
  for (double eps : scales) {
    const double e2 = eps * eps, tail = std::pow(e2 + 1.0, -a);
    RadialFn f{[&](double r) { return -(std::pow(e2 + r * r, -a) - tail); },
               [&](double r) { return 2.0 * a * r * std::pow(e2 + r * r, -a - 1.0); }};
    const auto I = radial_integrals(q, f, eps * 1e-8, 1.0, cfg);
    rep.quotients.push_back(std::pow(I.norm_pow, 1.0 / (k + 1)) / std::pow(I.energy, 1.0 / (k + 1)));
  }
  return rep;
}

}  // namespace hessvar

#endif  // HESSVAR_SHARP_CONSTANTS_HPP
