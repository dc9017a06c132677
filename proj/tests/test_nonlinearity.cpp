#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hessvar/nonlinearity.hpp"

using namespace hessvar;

namespace {

template <class F>
double simpson(F&& f, double a, double b, int m = 4000) {
  const double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

// F(z) = int_z^0 f, split at the breakpoints so Simpson sees smooth pieces
double primitive_oracle(const Nonlinearity& nl, double z, std::vector<double> breaks) {
  const double lo = std::min(z, 0.0), hi = std::max(z, 0.0);
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], lo), b = std::min(breaks[i + 1], hi);
    if (b > a) acc += simpson([&](double t) { return nl.f(t); }, a, b);
  }
  return z <= 0.0 ? acc : -acc;
}

ProblemParams params(int n, int k, double s) {
  ProblemParams p;
  p.n = n;
  p.k = k;
  p.s = s;
  return p;
}

}  // namespace

TEST(Source, ConstantAndPower) {
  const auto c = constant_nl(2.5);
  EXPECT_EQ(c.f(-3.0), 2.5);
  EXPECT_DOUBLE_EQ(c.F(-3.0), 7.5);
  const auto pw = power_nl(1.5, 0.0, 2.0);
  EXPECT_DOUBLE_EQ(pw.f(-4.0), 16.0);
  EXPECT_EQ(pw.f(1.0), 0.0);
  for (double z : {-0.3, -1.0, -7.0}) EXPECT_NEAR(pw.F(z), primitive_oracle(pw, z, {}), 1e-10 * pw.F(z));
  EXPECT_DOUBLE_EQ(pw.df(-4.0), -2.0 * 1.5 * 2.0);
}

TEST(Source, EigenKindIsWeightedPower) {
  const auto p = params(5, 2, -0.1);
  const auto e = eigen_nl(p, 3.0);
  EXPECT_DOUBLE_EQ(e.weight.sigma, -0.4);
  EXPECT_DOUBLE_EQ(e.f(-2.0), 12.0);
}

TEST(Source, MollifiedShape) {
  const auto p = params(3, 1, 0.0);
  const double d = 0.05, eps = 0.01, M = 20.0;
  const auto nl = mollified_nl(p, d, eps, M);
  const double e = 5.0;  // k* - 1
  EXPECT_DOUBLE_EQ(nl.f(-0.5 * d), std::pow(d, e));
  EXPECT_DOUBLE_EQ(nl.f(0.3 * d), std::pow(d, e));
  EXPECT_DOUBLE_EQ(nl.f(-3.0), std::pow(3.0, e));
  EXPECT_DOUBLE_EQ(nl.f(-2.0 * M), eps / (4 * M * M));
  // continuity across the four joins
  for (double t : {d, 2 * d, M, M + eps})
    EXPECT_NEAR(nl.f(-t * (1 - 1e-12)), nl.f(-t * (1 + 1e-12)), 1e-9 * std::max(1.0, nl.f(-t)));
  // positive everywhere, nondecreasing in |z| up to M, nonincreasing after
  double prev = nl.f(0.0);
  for (double t = 0.0; t <= M; t += 1e-3) {
    const double v = nl.f(-t);
    EXPECT_GT(v, 0.0);
    EXPECT_GE(v, prev * (1 - 1e-14));
    prev = v;
  }
  prev = nl.f(-M);
  for (double t = M; t <= M + 5; t += 1e-4) {
    const double v = nl.f(-t);
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, prev * (1 + 1e-14));
    prev = v;
  }
}

TEST(Source, MollifiedPrimitive) {
  const auto nl = mollified_nl(params(3, 1, 0.0), 0.05, 0.01, 2.0);
  const std::vector<double> br{-0.05, -0.1, -2.0, -2.01, 0.05, 0.1, 2.0, 2.01};
  for (double z : {-0.03, -0.07, -1.0, -2.005, -4.0, 0.07, 3.0}) {
    const double ref = primitive_oracle(nl, z, br);
    EXPECT_NEAR(nl.F(z), ref, 1e-9 * std::max(1.0, std::abs(ref))) << z;
  }
}

TEST(Source, CappedPrimitiveAndContinuity) {
  const auto base = power_nl(1.5);
  const auto nl = capped_nl(base, 2.0, 3.0);
  EXPECT_NEAR(nl.f(-2.0 - 1e-12), nl.f(-2.0 + 1e-12), 1e-10);
  EXPECT_DOUBLE_EQ(nl.f(-1.0), 1.0);
  EXPECT_NEAR(nl.f(-4.0), std::pow(2.0, 1.5) * std::pow(2.0, -3.0) * 64.0, 1e-12);
  for (double z : {-1.0, -3.0, -10.0}) {
    const double ref = primitive_oracle(nl, z, {-2.0});
    EXPECT_NEAR(nl.F(z), ref, 1e-9 * ref) << z;
  }
}

TEST(Source, RegularizedBounds) {
  const auto base = power_nl(0.5);
  const double m = 10.0;
  const int k = 2;
  const auto nl = regularized_nl(base, m, k);
  for (double z = -30.0; z <= 1.0; z += 0.01) {
    const double v = nl.f(z);
    EXPECT_GE(v, std::pow(1.0 / m, k) * (1 - 1e-14));
    if (z >= -m) EXPECT_NEAR(std::pow(v, 1.0 / k), std::pow(base.f(z), 1.0 / k) + 1.0 / m, 1e-12);
    if (z <= -2 * m) EXPECT_NEAR(std::pow(v, 1.0 / k), std::pow(base.f(-2 * m), 1.0 / k) + 1.0 / m, 1e-12);
  }
  // int_0^1 (x^{1/4} + 1/10)^2 dx
  const double F1 = 1.0 / 1.5 + 0.2 / 1.25 + 0.01;
  EXPECT_NEAR(nl.F(-1.0), F1, 1e-12);
  for (double z : {-3.0, -15.0, -25.0}) {
    double ref = F1;
    std::vector<double> pts{z, -20.0, -10.0, -1.0};
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (pts[i] >= z && pts[i + 1] <= -1.0 && pts[i + 1] > pts[i])
        ref += simpson([&](double t) { return nl.f(t); }, pts[i], pts[i + 1]);
    EXPECT_NEAR(nl.F(z), ref, 1e-9 * std::abs(ref)) << z;
  }
  EXPECT_NEAR(nl.F(0.5), -0.5 * 0.01, 1e-15);
}

TEST(Source, RegularizedWeightMollified) {
  const auto base = power_nl(0.5, -0.5);
  const auto nl = regularized_nl(base, 100.0, 1);
  EXPECT_DOUBLE_EQ(nl.weight.delta, 0.01);
  EXPECT_TRUE(std::isfinite(nl.weight(0.0)));
}

TEST(Source, DerivativeMatchesDifferences) {
  const auto nl = capped_nl(power_nl(1.5), 3.0, 2.0);
  for (double z : {-0.5, -2.0, -5.0}) {
    const double h = 1e-5;
    EXPECT_NEAR(nl.df(z), (nl.f(z + h) - nl.f(z - h)) / (2 * h), 1e-6 * std::abs(nl.df(z)));
  }
}

TEST(Source, InvalidConfigurations) {
  EXPECT_THROW(mollified_nl(params(3, 2, 0.0), 0.1, 0.1, 5.0), InvalidInput);
  EXPECT_THROW(mollified_nl(params(3, 1, 0.0), 0.1, 0.1, 0.15), InvalidInput);
  EXPECT_THROW(capped_nl(constant_nl(1.0), 0.0, 2.0), InvalidInput);
  EXPECT_THROW(regularized_nl(constant_nl(1.0), -1.0, 1), InvalidInput);
}
