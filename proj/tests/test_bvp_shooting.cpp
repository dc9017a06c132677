#include <gtest/gtest.h>

#include <cmath>

#include "hessvar/bvp_shooting.hpp"
#include "hessvar/spectral.hpp"

using namespace hessvar;

namespace {

ProblemParams params(int n, int k, double s = 0.0, double R = 1.0) {
  ProblemParams p;
  p.n = n;
  p.k = k;
  p.s = s;
  p.R = R;
  return p;
}

// k = 1, n = 5: rho^4 w'(rho) = int_0^rho t^4 / (t^2 + d^2) dt
double wprime_k1_n5(double rho, double d) {
  return (rho * rho * rho / 3 - d * d * rho + d * d * d * std::atan(rho / d)) / std::pow(rho, 4);
}

template <class F>
double simpson(F&& f, double a, double b, int m = 4000) {
  const double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST(IntegrateOut, QuadraticRecovery) {
  for (auto p : {params(3, 1, 0.0, 1.0), params(5, 2, 0.0, 2.0), params(4, 4, 0.0, 0.5)}) {
    const auto prof = integrate_out(p, constant_nl(binomial(p.n, p.k)), -0.5 * p.R * p.R, make_grid(p.R, 1024, 1.0));
    EXPECT_NEAR(prof.u.back(), 0.0, 1e-5 * p.R * p.R);
    for (std::size_t i = 0; i + 1 < prof.u.size(); ++i) EXPECT_LE(prof.u[i], prof.u[i + 1]);
  }
}

TEST(IntegrateOut, ShiftedCenterValue) {
  for (double R : {0.5, 1.0, 2.0}) {
    const auto p = params(3, 2, 0.0, R);
    const auto prof = integrate_out(p, constant_nl(3.0), -1.0, make_grid(R, 1024, 1.0));
    EXPECT_NEAR(prof.u.back(), R * R / 2 - 1.0, 1e-5 * std::max(1.0, R * R));
  }
}

TEST(IntegrateOut, BoundaryValueSecondOrder) {
  const auto p = params(5, 2);
  auto gap = [&](int N) {
    return std::abs(integrate_out(p, constant_nl(10.0), -0.5, make_grid(1.0, N, 1.0)).u.back());
  };
  const double a = gap(128), b = gap(256), c = gap(512);
  EXPECT_NEAR(a / b, 4.0, 0.5);
  EXPECT_NEAR(b / c, 4.0, 0.5);
}

TEST(IntegrateOut, ResidualIsSecondOrder) {
  const auto nl = power_nl(1.5);
  auto ratio = [&](const ProblemParams& p, double r_min) {
    auto res = [&](int N) {
      return independent_residual(p, nl, integrate_out(p, nl, -2.0, make_grid(1.0, N, 1.0)), r_min);
    };
    const double a = res(512), b = res(1024), c = res(2048);
    EXPECT_LT(c, 1e-5);
    EXPECT_NEAR(a / b, b / c, 0.1);
    return b / c;
  };
  for (auto p : {params(5, 1), params(5, 2), params(8, 2), params(4, 4)}) {
    const double q = ratio(p, 0.0);
    EXPECT_GT(q, 3.5) << p.n << " " << p.k;
    EXPECT_LT(q, 4.5) << p.n << " " << p.k;
  }
  for (auto p : {params(3, 1), params(3, 2)}) {
    const double q = ratio(p, 0.1);
    EXPECT_GT(q, 3.5);
    EXPECT_LT(q, 4.5);
  }
}

TEST(IntegrateOut, OriginLayerIn3D) {
  // the O((h/r)^2) pointwise error next to r = 0 weighs h^{n/2} in the norm
  const auto p = params(3, 1);
  const auto nl = power_nl(1.5);
  auto res = [&](int N) { return independent_residual(p, nl, integrate_out(p, nl, -2.0, make_grid(1.0, N, 1.0))); };
  EXPECT_NEAR(res(512) / res(1024), std::pow(2.0, 1.5), 0.05);
}

TEST(IntegrateOut, RejectsNegativeSource) {
  const auto p = params(3, 1);
  EXPECT_THROW(integrate_out(p, constant_nl(-1.0), -1.0, make_grid(1.0, 64, 1.0)), NumericalFailure);
}

TEST(Shoot, ConstantSourceCenterValue) {
  for (double R : {1.0, 2.0}) {
    const auto p = params(3, 1, 0.0, R);
    const auto res = shoot(p, constant_nl(3.0), make_grid(R, 1024, 1.0), 1e-12, {-4.0 * R * R, -0.01});
    EXPECT_EQ(res.status, ShootStatus::Converged);
    EXPECT_LE(std::abs(res.boundary_gap), 1e-12);
    EXPECT_NEAR(res.center_value, -0.5 * R * R, 1e-5 * R * R);
    EXPECT_EQ(res.prof.u.back(), 0.0);
  }
}

TEST(Shoot, NoSignChangeIsAnError) {
  const auto p = params(3, 1);
  EXPECT_THROW(shoot(p, constant_nl(3.0), make_grid(1.0, 256, 1.0), 1e-12, {-0.3, -0.1}), NumericalFailure);
}

TEST(Shoot, EigenProblemIsDegenerate) {
  const auto p = params(5, 2, -0.1);
  const auto g = make_grid(p, 1024);
  const auto eig = inverse_iteration(p, quadratic_profile(g), 1e-10);
  Shooter sh(p, eigen_nl(p, eig.lambda1), g);
  // k-homogeneous source: u(R) scales with a and vanishes for every a
  for (double a : {-0.1, -1.0, -10.0}) EXPECT_LT(std::abs(sh.gap(a)), 1e-7 * std::abs(a));
  const auto res = sh.shoot(-4.0, -0.5);
  EXPECT_EQ(res.status, ShootStatus::DegenerateBracket);
}

TEST(Shoot, SuperlinearPowerSource) {
  const auto p = params(5, 1, -0.25);
  const double kstar = critical_exponent(p).value;
  const double q = 0.5 * (p.k + kstar - 1.0);
  const auto nl = power_nl(q, 2 * p.s * p.k);
  ShootConfig cfg;
  cfg.sweep_hi = 12;
  Shooter sh(p, nl, make_grid(p, 8192), cfg);
  const auto br = Shooter::brackets(sh.sweep());
  ASSERT_FALSE(br.empty());
  const auto res = sh.shoot(br.front().first, br.front().second);
  EXPECT_EQ(res.status, ShootStatus::Converged);
  EXPECT_LT(res.center_value, 0.0);
  EXPECT_LE(res.ode_residual, 1e-5);
  DivergenceForm form(p, res.prof.grid);
  EXPECT_TRUE(form.admissible(res.prof.u));
}

TEST(Comparison, ClosedFormForK1) {
  const auto p = params(5, 1);
  const double eta = 0.5;
  for (double d : {1e-2, 1e-3}) {
    const auto g = make_grid(eta, 4096, 2.0);
    const auto w = nonexistence_ode(p, d, eta, g);
    EXPECT_EQ(w.u.back(), 0.0);
    for (int j = 1; j <= 20; ++j) {
      const int i = j * 4096 / 21;
      const double r = g->r[i];
      const double exact_du = wprime_k1_n5(r, d);
      EXPECT_NEAR(w.du[i], exact_du, 1e-4 * exact_du) << r;
      // w(r) = -int_r^eta w'
      const double exact_w = -simpson([&](double t) { return wprime_k1_n5(t, d); }, r, eta);
      EXPECT_NEAR(w.u[i], exact_w, 1e-4 * std::abs(exact_w)) << r;
    }
  }
}

TEST(Comparison, LowerBoundsAtTwoDelta) {
  for (auto p : {params(5, 1, -1.0), params(5, 2, -1.0), params(7, 3, -1.0)}) {
    const double eta = 0.5, d = 1e-3;
    const auto g = make_grid(eta, 4096, 2.0);
    const auto w = nonexistence_ode(p, d, eta, g);
    const double c = comparison_lower_constant(p.n, p.k);
    for (std::size_t i = 0; i + 1 < g->r.size(); ++i)
      if (g->r[i] >= 2 * d) EXPECT_GE(w.du[i] * g->r[i], c * (1 - 1e-4)) << g->r[i];
    const double bound = c * (std::log(2 * d) - std::log(eta));
    EXPECT_LE(interpolate(w, 2 * d), bound * (1 - 0.05));
  }
}

TEST(Comparison, LogSlopeForK1) {
  const auto p = params(5, 1, -1.0);
  const double eta = 0.5;
  const auto g = make_grid(eta, 4096, 2.0);
  const double w3 = interpolate(nonexistence_ode(p, 1e-3, eta, g), 2e-3);
  const double w4 = interpolate(nonexistence_ode(p, 1e-4, eta, g), 2e-4);
  // large-scale limit of w(2 delta) ~ (1/(n-2)) log delta
  const double slope = (w3 - w4) / (std::log(1e-3) - std::log(1e-4));
  EXPECT_NEAR(slope, 1.0 / 3.0, 0.1 / 3.0);
  EXPECT_DOUBLE_EQ(comparison_log_slope(5, 1), 1.0 / 3.0);
}

TEST(Comparison, PreconditionsEnforced) {
  const auto g = make_grid(0.5, 4096, 2.0);
  EXPECT_THROW(nonexistence_ode(params(4, 2), 1e-3, 0.5, g), InvalidInput);
  EXPECT_THROW(nonexistence_ode(params(5, 1), 0.3, 0.5, g), InvalidInput);
  EXPECT_THROW(nonexistence_ode(params(5, 1), 1e-3, 0.4, g), InvalidInput);
  EXPECT_THROW(nonexistence_ode(params(5, 1), 1e-3, 0.5, make_grid(0.5, 64, 1.0)), InvalidInput);
}

TEST(Interpolate, ExactOnCubics) {
  auto g = make_grid(1.0, 32, 1.0);
  auto prof = sample_profile(g, [](double r) { return r * r * r - 1.0; }, [](double r) { return 3 * r * r; });
  for (double x : {0.013, 0.4, 0.777}) EXPECT_NEAR(interpolate(prof, x), x * x * x - 1.0, 1e-14);
}
