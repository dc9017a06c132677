#ifndef HESSVAR_HESSIAN_CORE_HPP
#define HESSVAR_HESSIAN_CORE_HPP

// Elementary symmetric polynomials, the Garding cones Gamma_k and the
// spectrum of a radial Hessian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hessvar/errors.hpp"

namespace hessvar {

/// Binomial coefficient C(n, k) as a double; zero outside 0 <= k <= n.
inline double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

/// Eigenvalues of a symmetric n x n Hessian.
class EigenTuple {
 public:
  EigenTuple() = default;
  explicit EigenTuple(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidInput("EigenTuple: dimension must be >= 1");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("EigenTuple: non-finite entry");
  }

  int dimension() const { return static_cast<int>(values_.size()); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Index k of the cone Gamma_k (and of sigma_k), 1 <= k.
struct ConeLevel {
  int k = 1;

  explicit ConeLevel(int level) : k(level) {
    if (level < 1) throw InvalidInput("ConeLevel: k must be >= 1");
  }
};

namespace detail {

inline void check_level(ConeLevel level, int n) {
  if (level.k > n)
    throw InvalidInput("cone level k=" + std::to_string(level.k) +
                       " exceeds dimension n=" + std::to_string(n));
}

}  // namespace detail

/// sigma_0..sigma_kmax of lam via the product recurrence prod_i (1 + lam_i t).
/// O(n kmax), no subset enumeration.
inline std::vector<double> sigma_all(std::span<const double> lam, int kmax) {
  std::vector<double> e(static_cast<std::size_t>(kmax) + 1, 0.0);
  e[0] = 1.0;
  int seen = 0;
  for (double l : lam) {
    ++seen;
    for (int j = std::min(seen, kmax); j >= 1; --j) e[j] += l * e[j - 1];
  }
  return e;
}

/// k-th elementary symmetric polynomial of the eigenvalues.
inline double sigma(ConeLevel level, const EigenTuple& lam) {
  detail::check_level(level, lam.dimension());
  return sigma_all(lam.values(), level.k)[level.k];
}

/// True iff sigma_j(lam) > margin for every j = 1..k.
///
/// margin = 0 is the open cone; flow steps pass a positive margin to get a
/// rejection test that does not flip on round-off.
inline bool in_gamma_k(ConeLevel level, const EigenTuple& lam, double margin = 0.0) {
  detail::check_level(level, lam.dimension());
  const auto e = sigma_all(lam.values(), level.k);
  for (int j = 1; j <= level.k; ++j)
    if (!(e[j] > margin)) return false;
  return true;
}

/// Spectrum of D^2 u for radial u: u'' once and u'/r with multiplicity n-1.
/// At r = 0 callers pass slope_over_r = u''(0).
inline EigenTuple radial_hessian_eigs(int n, double u2, double slope_over_r) {
  if (n < 1) throw InvalidInput("radial_hessian_eigs: n must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(n), slope_over_r);
  v[0] = u2;
  return EigenTuple(std::move(v));
}

/// S_k(D^2 u) at radius r from u'(r) = u1 and u''(r) = u2:
///   C(n-1,k-1) u2 (u1/r)^{k-1} + C(n-1,k) (u1/r)^k.
/// At r = 0 all eigenvalues equal u''(0), giving C(n,k) u2^k.
inline double radial_sk(int n, int k, double u1, double u2, double r) {
  if (k < 1 || k > n) throw InvalidInput("radial_sk: need 1 <= k <= n");
  if (r < 0.0) throw InvalidInput("radial_sk: r must be >= 0");
  if (r == 0.0) return binomial(n, k) * std::pow(u2, k);
  const double t = u1 / r;
  return binomial(n - 1, k - 1) * u2 * std::pow(t, k - 1) + binomial(n - 1, k) * std::pow(t, k);
}

}  // namespace hessvar

#endif  // HESSVAR_HESSIAN_CORE_HPP
