#include "vdamp/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdamp/error.hpp"
#include "vdamp/rng.hpp"

namespace vdamp {

namespace {

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

StepSchedule StepSchedule::constant(double eps) {
  if (!(eps > 0.0)) throw DomainError("step size must be > 0");
  return {StepRule::Constant, eps, 0.0};
}

StepSchedule StepSchedule::power_decay(double eps0, double rho) {
  if (!(eps0 > 0.0)) throw DomainError("eps0 must be > 0");
  if (!(rho > 0.5 && rho <= 1.0)) throw DomainError("rho must lie in (1/2, 1]");
  return {StepRule::PowerDecay, eps0, rho};
}

double StepSchedule::operator()(std::size_t n) const noexcept {
  if (rule == StepRule::Constant) return eps0;
  return eps0 * std::pow(static_cast<double>(n) + 1.0, -rho);
}

bool StepSchedule::sum_diverges() const noexcept { return rule == StepRule::Constant || rho <= 1.0; }

bool StepSchedule::higher_power_summable() const noexcept {
  return rule == StepRule::PowerDecay && rho > 0.5;
}

NoiseModel NoiseModel::gaussian(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  return {NoiseKind::GaussianAdditive, sigma, seed};
}

void noisy_gradient(const Potential& pot, const NoiseModel& noise, std::size_t n,
                    std::span<const double> x, std::span<double> out) {
  pot.gradient(x, out);
  if (noise.kind == NoiseKind::None || noise.sigma == 0.0) return;
  const CounterRng rng(noise.seed);
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) out[i] += noise.sigma * rng.gaussian(n * d + i);
}

DiscretePath::DiscretePath(std::size_t dim, std::size_t steps)
    : dim_(dim), tau_(steps + 1), eps_(steps + 1), h_((steps + 1) * dim), x_((steps + 1) * dim) {}

DiscretePath run_recursion(const Potential& pot, const StepSchedule& steps,
                           const NoiseModel& noise, std::span<const double> x0, std::size_t n) {
  if (n < 1) throw DomainError("run_recursion: N must be >= 1");
  const std::size_t d = x0.size();
  if (d != pot.dim()) throw DomainError("run_recursion: X0 dimension does not match the potential");
  if (!(steps.eps0 > 0.0)) throw DomainError("run_recursion: eps0 must be > 0");

  DiscretePath path(d, n);
  path.steps_rule = steps;
  path.noise = noise;
  std::copy(x0.begin(), x0.end(), path.x_.begin());
  for (std::size_t k = 0; k <= n; ++k) path.eps_[k] = steps(k);

  Neumaier tau;
  tau.add(path.eps_[0]);
  path.tau_[0] = tau.value();
  std::vector<double> g(d);
  for (std::size_t k = 0; k < n; ++k) {
    const double* hk = path.h_.data() + k * d;
    const double* xk = path.x_.data() + k * d;
    double* h1 = path.h_.data() + (k + 1) * d;
    double* x1 = path.x_.data() + (k + 1) * d;
    const double ek = path.eps_[k];
    const double tk = path.tau_[k];
    noisy_gradient(pot, noise, k, {xk, d}, g);
    const double e1 = path.eps_[k + 1];
    for (std::size_t i = 0; i < d; ++i) {
      h1[i] = hk[i] - ek * hk[i] / tk + ek * g[i] / tk;
      x1[i] = xk[i] - e1 * h1[i];
      if (!std::isfinite(h1[i]) || !std::isfinite(x1[i]))
        throw SolverError(SolverFailure::NonFiniteState,
                          "recursion diverged at step " + std::to_string(k + 1));
    }
    tau.add(e1);
    path.tau_[k + 1] = tau.value();
  }
  return path;
}

double drift_identity_residual(const DiscretePath& path, const Potential& pot) {
  const std::size_t d = path.dim();
  std::vector<Neumaier> num(d), mag(d);
  std::vector<double> g(d);
  double worst = 0.0;
  for (std::size_t k = 0; k < path.steps(); ++k) {
    noisy_gradient(pot, path.noise, k, path.x(k), g);
    const double ek = path.eps(k);
    const double tk = path.tau(k);
    const auto h1 = path.h(k + 1);
    for (std::size_t i = 0; i < d; ++i) {
      num[i].add(ek * g[i]);
      mag[i].add(ek * std::abs(g[i]));
      const double closed = num[i].value() / tk;
      const double scale = mag[i].value() / tk;
      if (scale > 0.0) worst = std::max(worst, std::abs(h1[i] - closed) / scale);
      else if (h1[i] != 0.0) worst = std::max(worst, 1.0);
    }
  }
  return worst;
}

Vec limiting_ode_rhs(double t, std::span<const double> x, std::span<const double> v, double beta,
                     const Potential& pot) {
  const double clock = t + beta;
  if (!(clock > 0.0)) throw DomainError("limit equation needs t + beta > 0");
  const Vec g = pot.gradient(x);
  Vec acc(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] = -(v[i] + g[i]) / clock;
  return acc;
}

OdeComparison compare_to_ode(const DiscretePath& path, const Potential& pot, double horizon,
                             double beta) {
  const std::size_t d = path.dim();
  if (beta < 0.0) beta = path.tau(0);
  if (!(beta > 0.0)) throw DomainError("compare_to_ode: beta must be > 0");
  if (!(horizon > beta)) throw DomainError("compare_to_ode: horizon must exceed beta");

  // y = [h, X] with the clock tau as independent variable. The averaged drift
  // starts from its first recursion value h^1 = g(X^0, omega^1).
  std::vector<double> y0(2 * d);
  const auto h0 = path.h(1);
  const auto x0 = path.x(0);
  std::copy(h0.begin(), h0.end(), y0.begin());
  std::copy(x0.begin(), x0.end(), y0.begin() + d);
  std::vector<double> g(d);
  const OdeRhs rhs = [&](double tau, std::span<const double> y, std::span<double> dy) {
    pot.gradient(y.subspan(d, d), g);
    for (std::size_t i = 0; i < d; ++i) {
      dy[i] = -(y[i] - g[i]) / tau;
      dy[d + i] = -y[i];
    }
  };
  OdeOptions opts;
  opts.rel_tol = 1e-11;
  opts.abs_tol = 1e-13;
  const double last_tau = std::min(horizon, path.tau(path.steps()));
  if (!(last_tau > beta)) throw DomainError("compare_to_ode: path ends before the clock offset");
  const OdeResult sol = solve_ode(rhs, beta, y0, last_tau, opts);

  OdeComparison out;
  out.horizon = last_tau;
  double ss = 0.0;
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    const double tau = path.tau(k);
    if (tau > last_tau) break;
    if (tau < beta) continue;
    const auto xk = path.x(k);
    double dev2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = xk[i] - sol.dense.eval_component(tau, d + i);
      dev2 += diff * diff;
    }
    out.sup_deviation = std::max(out.sup_deviation, std::sqrt(dev2));
    ss += dev2;
    ++out.compared;
  }
  out.rms_deviation = out.compared ? std::sqrt(ss / static_cast<double>(out.compared)) : 0.0;
  return out;
}

double path_lyapunov(const DiscretePath& path, const Potential& pot, std::size_t n) {
  double hh = 0.0;
  for (double hi : path.h(n)) hh += hi * hi;
  return pot.energy(path.x(n)) + 0.5 * path.tau(n) * hh;
}

double path_energy(const DiscretePath& path, const Potential& pot, std::size_t n) {
  double hh = 0.0;
  for (double hi : path.h(n)) hh += hi * hi;
  return pot.energy(path.x(n)) + 0.5 * hh;
}

}  // namespace vdamp
