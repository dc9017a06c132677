#ifndef HESSVAR_FLOW_ENGINE_HPP
#define HESSVAR_FLOW_ENGINE_HPP

// Descent flow  log S_k(D^2 u) - u_t = log psi(x, u)  on the discrete
// divergence form, advanced by linearly implicit Euler steps with
// energy/admissibility backtracking.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hessvar/errors.hpp"
#include "hessvar/nonlinearity.hpp"
#include "hessvar/radial_calculus.hpp"

namespace hessvar {

namespace detail {

inline double neumaier_sum(std::span<const double> v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

// Solve a tridiagonal system in place; lo[0] and up[n-1] are ignored.
inline void thomas(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up,
                   std::vector<double>& rhs) {
  const std::size_t n = di.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

}  // namespace detail

/// Something that supplies psi and the potential part of J.
template <class S>
concept FlowSource = requires(const S& s, std::span<const double> u) {
  { s.psi(u) } -> std::convertible_to<std::vector<double>>;
  { s.dlog_psi(u) } -> std::convertible_to<std::vector<double>>;
  { s.potential(u) } -> std::convertible_to<double>;
};

/// psi_i = mult L_i f(u_i) / V_i; potential = mult sum L_i F(u_i).
class LocalSource {
 public:
  LocalSource(const DivergenceForm& form, Nonlinearity nl, double mult = 1.0)
      : nl_(std::move(nl)), mult_(mult), L_(nl_.loads(form)), V_(form.volumes().begin(), form.volumes().end()) {}

  const Nonlinearity& nonlinearity() const { return nl_; }
  std::span<const double> loads() const { return L_; }

  std::vector<double> psi(std::span<const double> u) const {
    std::vector<double> out(V_.size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mult_ * L_[i] * nl_.f(u[i]) / V_[i];
    return out;
  }

  std::vector<double> dlog_psi(std::span<const double> u) const {
    std::vector<double> out(V_.size() - 1);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double f = nl_.f(u[i]);
      out[i] = f > 0.0 ? nl_.df(u[i]) / f : 0.0;
    }
    return out;
  }

  double potential(std::span<const double> u) const {
    std::vector<double> t(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) t[i] = L_[i] * nl_.F(u[i]);
    return mult_ * detail::neumaier_sum(t);
  }

 private:
  Nonlinearity nl_;
  double mult_;
  std::vector<double> L_, V_;
};

/// psi = lambda eta(u) weight f(u) with eta(u) = (k* int F)^{(k+1-k*)/k*};
/// the potential is lambda/(k+1) (k* int F)^{(k+1)/k*}.
class NormalizedSource {
 public:
  NormalizedSource(const DivergenceForm& form, Nonlinearity nl, double lambda, double kstar)
      : local_(form, std::move(nl)), lambda_(lambda), kstar_(kstar), k_(form.params().k) {
    if (!(kstar > 0.0) || !std::isfinite(kstar)) throw InvalidInput("NormalizedSource: k* must be finite");
  }

  double eta(std::span<const double> u) const {
    const double I = kstar_ * local_.potential(u);
    if (!(I > 0.0)) throw NumericalFailure("eta: int F vanished");
    return std::pow(I, (k_ + 1.0 - kstar_) / kstar_);
  }

  std::vector<double> psi(std::span<const double> u) const {
    auto out = local_.psi(u);
    const double m = lambda_ * eta(u);
    for (double& x : out) x *= m;
    return out;
  }

  std::vector<double> dlog_psi(std::span<const double> u) const { return local_.dlog_psi(u); }

  double potential(std::span<const double> u) const {
    return lambda_ / (k_ + 1.0) * std::pow(kstar_ * local_.potential(u), (k_ + 1.0) / kstar_);
  }

 private:
  LocalSource local_;
  double lambda_, kstar_;
  int k_;
};

struct FlowConfig {
  double dt0 = 1e-3;
  double dt_max = 1e8;
  double growth = 1.2;
  int max_halvings = 40;
  double tol = 1e-8;
  int max_steps = 20000;
  double cone_margin = 0.0;
  double descent_slack = 1e-12;
  double max_log_change = 0.5;  // cap on the linearized |d log S| per step
};

struct FlowTraceRow {
  int step = 0;
  double time = 0.0;
  double dt = 0.0;
  double J = 0.0;
  double residual = 0.0;
};

struct FlowState {
  double time = 0.0;
  RadialProfile prof;
  double energy = 0.0;  // J
  double residual = 0.0;
  double dt = 0.0;
  int steps = 0;
  bool converged = false;
  std::vector<FlowTraceRow> trace;
};

template <FlowSource Source>
class FlowEngine {
 public:
  FlowEngine(const DivergenceForm& form, const Source& source, FlowConfig cfg = {})
      : form_(form), src_(source), cfg_(cfg) {}

  const DivergenceForm& form() const { return form_; }
  const Source& source() const { return src_; }
  const FlowConfig& config() const { return cfg_; }

  double J(std::span<const double> u) const { return form_.energy(u) / (form_.params().k + 1) - src_.potential(u); }

  /// sqrt(sum_i V_i (S_i - psi_i)^2) over nodes 0..N-1.
  double residual(std::span<const double> u) const {
    const auto S = form_.nodal_sk(u);
    const auto psi = src_.psi(u);
    const auto V = form_.volumes();
    double acc = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i) acc += V[i] * (S[i] - psi[i]) * (S[i] - psi[i]);
    return std::sqrt(acc);
  }

  bool admissible(std::span<const double> u) const { return form_.admissible(u, cfg_.cone_margin); }

  FlowState start(RadialProfile init) const {
    if (init.grid.get() != &form_.grid() && init.grid->r != form_.grid().r)
      throw InvalidInput("flow: profile grid differs from the engine grid");
    init.u.back() = 0.0;
    if (!admissible(init.u)) throw DomainError("flow: initial profile is not admissible");
    init.refresh_derivative();
    FlowState st;
    st.prof = std::move(init);
    st.energy = J(st.prof.u);
    st.residual = residual(st.prof.u);
    st.dt = cfg_.dt0;
    st.converged = st.residual <= cfg_.tol;
    st.trace.push_back({0, 0.0, st.dt, st.energy, st.residual});
    return st;
  }

  /// One accepted step. Throws NumericalFailure after max_halvings rejections.
  FlowState step(const FlowState& st) const {
    const auto& u = st.prof.u;
    const int N = form_.N();
    const auto S = form_.nodal_sk(u);
    const auto psi = src_.psi(u);
    const auto dlp = src_.dlog_psi(u);
    const auto g = form_.slopes(u);
    const auto A = form_.conductance();
    const auto V = form_.volumes();
    const auto& grid = form_.grid();
    const int k = form_.params().k;

    std::vector<double> a(N);
    for (int c = 0; c < N; ++c) a[c] = A[c] * k * std::pow(g[c], k - 1) / grid.h(c);

    std::vector<double> rhs0(N), jl(N, 0.0), jd(N), ju(N, 0.0);
    for (int i = 0; i < N; ++i) {
      rhs0[i] = std::log(S[i]) - std::log(psi[i]);
      const double den = V[i] * S[i];
      const double left = i > 0 ? a[i - 1] : 0.0;
      jl[i] = left / den;
      ju[i] = i + 1 < N ? a[i] / den : 0.0;
      jd[i] = -(a[i] + left) / den - dlp[i];
    }

    double dt = st.dt;
    for (int attempt = 0; attempt <= cfg_.max_halvings; ++attempt, dt *= 0.5) {
      std::vector<double> lo(N), di(N), up(N), v(N);
      for (int i = 0; i < N; ++i) {
        lo[i] = -dt * jl[i];
        di[i] = 1.0 - dt * jd[i];
        up[i] = -dt * ju[i];
        v[i] = dt * rhs0[i];
      }
      detail::thomas(lo, di, up, v);
      // near-boundary cells can be stiff enough that every dt gives a full
      // Newton step on log S, so damp the increment itself
      double worst = 0.0;
      for (int i = 0; i < N; ++i) {
        const double dl = jl[i] * (i > 0 ? v[i - 1] : 0.0) + (jd[i] + dlp[i]) * v[i] + ju[i] * (i + 1 < N ? v[i + 1] : 0.0);
        worst = std::max(worst, std::abs(dl));
      }
      const double theta = worst > cfg_.max_log_change ? cfg_.max_log_change / worst : 1.0;
      std::vector<double> un(u);
      for (int i = 0; i < N; ++i) un[i] += theta * v[i];
      un[N] = 0.0;
      if (!std::all_of(un.begin(), un.end(), [](double x) { return std::isfinite(x); })) continue;
      if (!admissible(un)) continue;
      const double Jn = J(un);
      if (!(Jn <= st.energy + cfg_.descent_slack * std::abs(st.energy))) continue;

      FlowState out;
      out.time = st.time + dt;
      out.prof = st.prof;
      out.prof.u = std::move(un);
      out.prof.refresh_derivative();
      out.energy = Jn;
      out.residual = residual(out.prof.u);
      out.dt = std::min(dt * cfg_.growth, cfg_.dt_max);
      out.steps = st.steps + 1;
      out.converged = out.residual <= cfg_.tol;
      return out;
    }
    throw NumericalFailure("flow stuck: step size underflow after " + std::to_string(cfg_.max_halvings) +
                           " halvings");
  }

  /// Step until residual <= tol or the step budget runs out.
  FlowState run(RadialProfile init) const {
    FlowState st = start(std::move(init));
    auto trace = std::move(st.trace);
    while (!st.converged && st.steps < cfg_.max_steps) {
      st = step(st);
      trace.push_back({st.steps, st.time, st.dt, st.energy, st.residual});
    }
    st.trace = std::move(trace);
    return st;
  }

 private:
  const DivergenceForm& form_;
  const Source& src_;
  FlowConfig cfg_;
};

/// J(u) = I_k(u)/(k+1) - int F(x, u).
inline double functional_J(const ProblemParams& p, const RadialProfile& prof, const Nonlinearity& nl) {
  require_admissible_shape(prof, "functional_J");
  DivergenceForm form(p, prof.grid);
  LocalSource src(form, nl);
  return form.energy(prof.u) / (p.k + 1) - src.potential(prof.u);
}

inline FlowState flow_to_steady(const ProblemParams& p, const RadialProfile& init, const Nonlinearity& nl,
                                FlowConfig cfg = {}) {
  DivergenceForm form(p, init.grid);
  LocalSource src(form, nl);
  return FlowEngine<LocalSource>(form, src, cfg).run(init);
}

struct NormalizedFlowResult {
  FlowState state;
  double eta_min = 0.0;
  double eta_max = 0.0;
};

/// Flow with psi = lambda eta(u) (|x|^2 + delta^2)^{sk} f(u), eta recomputed every step.
inline NormalizedFlowResult normalized_flow(const ProblemParams& p, const RadialProfile& init,
                                            const Nonlinearity& mollified, double lambda_mult,
                                            FlowConfig cfg = {}, double eta_bound = 1e12) {
  const auto ks = critical_exponent(p);
  DivergenceForm form(p, init.grid);
  NormalizedSource src(form, mollified, lambda_mult, ks.value);
  FlowEngine<NormalizedSource> eng(form, src, cfg);
  NormalizedFlowResult res;
  FlowState st = eng.start(init);
  auto trace = std::move(st.trace);
  res.eta_min = res.eta_max = src.eta(st.prof.u);
  auto check_eta = [&](double e) {
    if (!(e > 1.0 / eta_bound && e < eta_bound))
      throw NumericalFailure("eta left its bounds; mollification parameters too extreme");
    res.eta_min = std::min(res.eta_min, e);
    res.eta_max = std::max(res.eta_max, e);
  };
  check_eta(res.eta_min);
  while (!st.converged && st.steps < cfg.max_steps) {
    st = eng.step(st);
    check_eta(src.eta(st.prof.u));
    trace.push_back({st.steps, st.time, st.dt, st.energy, st.residual});
  }
  st.trace = std::move(trace);
  res.state = std::move(st);
  return res;
}

/// Largest |dJ(u; d)| / ||d||_V over random smooth directions vanishing at R,
/// by central differences. Bounded by the flow residual at a steady state.
template <FlowSource Source>
double euler_lagrange_residual(const FlowEngine<Source>& eng, std::span<const double> u, int n_dirs,
                               std::uint64_t seed) {
  const auto& g = eng.form().grid();
  const auto V = eng.form().volumes();
  const double R = g.R();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double scale = std::max(max_abs(u), 1e-12);
  double worst = 0.0;
  for (int d = 0; d < n_dirs; ++d) {
    const double c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
    std::vector<double> dir(u.size());
    double nrm = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double x = g.r[i] / R;
      dir[i] = c1 * std::cos(0.5 * std::numbers::pi * x) + c2 * std::cos(1.5 * std::numbers::pi * x) +
               c3 * std::cos(2.5 * std::numbers::pi * x);
      if (i + 1 < u.size()) nrm += V[i] * dir[i] * dir[i];
    }
    dir.back() = 0.0;
    nrm = std::sqrt(nrm);
    double eps = 1e-5 * scale / std::max(max_abs(dir), 1e-300);
    std::vector<double> up(u.begin(), u.end()), um(u.begin(), u.end());
    for (int tries = 0; tries < 30; ++tries) {
      for (std::size_t i = 0; i < u.size(); ++i) {
        up[i] = u[i] + eps * dir[i];
        um[i] = u[i] - eps * dir[i];
      }
      if (eng.form().admissible(up) && eng.form().admissible(um)) break;
      eps *= 0.5;
    }
    const double dJ = (eng.J(up) - eng.J(um)) / (2.0 * eps);
    worst = std::max(worst, std::abs(dJ) / nrm);
  }
  return worst;
}

}  // namespace hessvar

#endif  // HESSVAR_FLOW_ENGINE_HPP
