#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hessvar/hessian_core.hpp"

using namespace hessvar;

namespace {

// sum over k-subsets by bitmask
double sigma_by_subsets(const std::vector<double>& lam, int k) {
  const int n = static_cast<int>(lam.size());
  double acc = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= lam[i];
    acc += prod;
  }
  return acc;
}

double sigma_abs_bound(const std::vector<double>& lam, int k) {
  std::vector<double> a(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) a[i] = std::abs(lam[i]);
  return sigma_by_subsets(a, k);
}

}  // namespace

TEST(Sigma, SmallExamples) {
  EXPECT_DOUBLE_EQ(sigma(ConeLevel(1), EigenTuple({1.5, -2.0, 4.0})), 3.5);
  EXPECT_DOUBLE_EQ(sigma(ConeLevel(2), EigenTuple({1, 1, 1})), 3.0);
  EXPECT_DOUBLE_EQ(sigma(ConeLevel(2), EigenTuple({3, 4, 5})), 47.0);
}

TEST(Sigma, LevelAboveDimensionRejected) {
  EXPECT_THROW(sigma(ConeLevel(4), EigenTuple({1, 2, 3})), InvalidInput);
  EXPECT_THROW(ConeLevel(0), InvalidInput);
  EXPECT_THROW(EigenTuple(std::vector<double>{}), InvalidInput);
}

TEST(Sigma, MatchesSubsetEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 8;
    std::vector<double> lam(n);
    for (double& x : lam) x = U(rng);
    for (int k = 1; k <= n; ++k) {
      const double ref = sigma_by_subsets(lam, k);
      // cancellation-aware tolerance: relative to sigma_k(|lam|)
      EXPECT_NEAR(sigma(ConeLevel(k), EigenTuple(lam)), ref, 1e-12 * sigma_abs_bound(lam, k));
    }
  }
}

TEST(Sigma, PartialDerivativeIsSigmaOfRemainder) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 6;
    std::vector<double> lam(n);
    for (double& x : lam) x = U(rng);
    for (int k = 1; k <= n; ++k)
      for (int i = 0; i < n; ++i) {
        const double h = 1e-5;
        auto lp = lam, lm = lam;
        lp[i] += h;
        lm[i] -= h;
        const double fd = (sigma(ConeLevel(k), EigenTuple(lp)) - sigma(ConeLevel(k), EigenTuple(lm))) / (2 * h);
        std::vector<double> rest;
        for (int j = 0; j < n; ++j)
          if (j != i) rest.push_back(lam[j]);
        const double exact = k == 1 ? 1.0 : sigma_by_subsets(rest, k - 1);
        EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact)));
      }
  }
}

TEST(GammaCone, Examples) {
  for (int k = 1; k <= 5; ++k) EXPECT_TRUE(in_gamma_k(ConeLevel(k), EigenTuple({1, 1, 1, 1, 1})));
  EXPECT_TRUE(in_gamma_k(ConeLevel(2), EigenTuple({-1, 3, 3})));
  EXPECT_FALSE(in_gamma_k(ConeLevel(3), EigenTuple({-1, 3, 3})));
  EXPECT_FALSE(in_gamma_k(ConeLevel(1), EigenTuple({0, 0, 0})));
}

TEST(GammaCone, MarginIsStrict) {
  EigenTuple lam({1, 1, 1});
  EXPECT_TRUE(in_gamma_k(ConeLevel(3), lam, 0.5));
  EXPECT_FALSE(in_gamma_k(ConeLevel(3), lam, 1.0));
}

TEST(GammaCone, Nesting) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 3.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const int n = 1 + trial % 8;
    std::vector<double> v(n);
    for (double& x : v) x = U(rng);
    EigenTuple lam(v);
    for (int k = 2; k <= n; ++k)
      if (in_gamma_k(ConeLevel(k), lam))
        for (int j = 1; j < k; ++j) EXPECT_TRUE(in_gamma_k(ConeLevel(j), lam));
  }
}

TEST(RadialEigs, Examples) {
  const auto e = radial_hessian_eigs(3, 2.0, 1.0);
  ASSERT_EQ(e.dimension(), 3);
  EXPECT_EQ(e[0], 2.0);
  EXPECT_EQ(e[1], 1.0);
  EXPECT_EQ(e[2], 1.0);
  for (int n = 1; n <= 7; ++n)
    for (int k = 1; k <= n; ++k) EXPECT_DOUBLE_EQ(sigma(ConeLevel(k), radial_hessian_eigs(n, 1.0, 1.0)), binomial(n, k));
}

TEST(RadialSk, Examples) {
  for (int n = 1; n <= 6; ++n)
    for (int k = 1; k <= n; ++k)
      for (double r : {0.0, 0.3, 2.0}) EXPECT_NEAR(radial_sk(n, k, r, 1.0, r), binomial(n, k), 1e-12);
  EXPECT_EQ(radial_sk(4, 2, 0.0, 7.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(radial_sk(3, 2, 2.0, 1.0, 2.0), 3.0);
}

TEST(RadialSk, AgreesWithEigenvalueRoute) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2.0, 2.0), Rr(0.01, 3.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + trial % 8;
    const int k = 1 + (trial / 8) % n;
    const double u1 = U(rng), u2 = U(rng), r = Rr(rng);
    const auto lam = radial_hessian_eigs(n, u2, u1 / r);
    std::vector<double> v(lam.values().begin(), lam.values().end());
    const double ref = sigma(ConeLevel(k), lam);
    EXPECT_NEAR(radial_sk(n, k, u1, u2, r), ref, 1e-12 * std::max(1.0, sigma_abs_bound(v, k)));
  }
}

TEST(RadialSk, DivergenceIdentity) {
  // u = r^4/4 + r^2/2: u' = r^3 + r, u'' = 3 r^2 + 1
  auto u1 = [](double r) { return r * r * r + r; };
  auto u2 = [](double r) { return 3 * r * r + 1; };
  for (int n : {3, 5})
    for (int k = 1; k <= n; ++k) {
      auto m = [&](double r) { return std::pow(r, n - k) * std::pow(u1(r), k); };
      const double h = 1e-3;
      for (double r : {0.2, 0.5, 0.9}) {
        const double lhs = std::pow(r, n - 1) * radial_sk(n, k, u1(r), u2(r), r);
        const double dm = (-m(r + 2 * h) + 8 * m(r + h) - 8 * m(r - h) + m(r - 2 * h)) / (12 * h);
        EXPECT_NEAR(lhs, binomial(n - 1, k - 1) / k * dm, 1e-8 * std::abs(lhs));
      }
    }
}

TEST(RadialSk, OriginUsesEigenvalueLimit) {
  EXPECT_DOUBLE_EQ(radial_sk(4, 2, 0.0, 2.0, 0.0), binomial(4, 2) * 4.0);
  EXPECT_THROW(radial_sk(3, 1, 1.0, 1.0, -0.1), InvalidInput);
}
