// A short tour of the library on the unit ball in R^5 with k = 1, s = -1/4.

#include <cstdio>

#include "hessvar/hessvar.hpp"

using namespace hessvar;

int main() {
  ProblemParams p;
  p.n = 5;
  p.k = 1;
  p.s = -0.25;

  const auto ks = critical_exponent(p);
  std::printf("k* = %.6g (%s)\n", ks.value, regime_name(ks.regime));

  const auto cstar = sharp_quotient({p, 1.0});
  std::printf("sharp constant C* = %.12g\n", cstar.quotient);

  const auto eig = principal_eigenpair(p, 1024, 1e-8);
  std::printf("lambda_1 = %.10g after %d iterations\n", eig.lambda1, eig.iterations);

  // |z|^{1/2} |x|^{2sk}: sublinear, solved by the descent flow
  const auto sub = solve_sublinear(p, power_nl(0.5, 2 * p.s * p.k));
  std::printf("sublinear:   J = %.6g, sup|u| = %.6g, residual %.3g, certificate %s\n", sub.state.energy,
              max_abs(sub.state.prof.u), sub.certificate.independent_residual,
              sub.certificate.passes() ? "ok" : "failed");

  // |z|^{3/2} |x|^{2sk}: superlinear, solved by shooting
  const auto sup = solve_superlinear(p, power_nl(1.5, 2 * p.s * p.k));
  std::printf("superlinear: J = %.6g, u(0) = %.6g, residual %.3g, certificate %s\n", sup.J,
              sup.solution.center_value, sup.solution.ode_residual, sup.certificate.passes() ? "ok" : "failed");
  return 0;
}
