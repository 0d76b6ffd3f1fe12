#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vdamp/ode.hpp"
#include "vdamp/potential.hpp"

namespace vdamp {

enum class StepRule { Constant, PowerDecay };

/// eps_n = eps0 (Constant) or eps0 (n+1)^-rho (PowerDecay, rho in (1/2, 1]).
struct StepSchedule {
  StepRule rule = StepRule::Constant;
  double eps0 = 1e-3;
  double rho = 1.0;

  static StepSchedule constant(double eps);
  static StepSchedule power_decay(double eps0, double rho);

  double operator()(std::size_t n) const noexcept;
  /// sum eps_n = inf.
  bool sum_diverges() const noexcept;
  /// sum eps_n^(1+alpha) < inf for some alpha > 0.
  bool higher_power_summable() const noexcept;
};

enum class NoiseKind { None, GaussianAdditive };

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed);
};

/// Noisy gradient g(x, omega^{n+1}) = g(x) + sigma xi^{n+1}. Component i of
/// the draw for step n uses counter n * dim + i of the seeded stream.
void noisy_gradient(const Potential& pot, const NoiseModel& noise, std::size_t n,
                    std::span<const double> x, std::span<double> out);

/// (tau^n, h^n, X^n) for n = 0..N in flat row-major storage.
class DiscretePath {
 public:
  DiscretePath() = default;
  DiscretePath(std::size_t dim, std::size_t steps);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t steps() const noexcept { return tau_.empty() ? 0 : tau_.size() - 1; }

  double tau(std::size_t n) const { return tau_[n]; }
  double eps(std::size_t n) const { return eps_[n]; }
  std::span<const double> h(std::size_t n) const { return {h_.data() + n * dim_, dim_}; }
  std::span<const double> x(std::size_t n) const { return {x_.data() + n * dim_, dim_}; }

  const std::vector<double>& taus() const noexcept { return tau_; }
  const std::vector<double>& h_flat() const noexcept { return h_; }
  const std::vector<double>& x_flat() const noexcept { return x_; }

  StepSchedule steps_rule;
  NoiseModel noise;

 private:
  friend DiscretePath run_recursion(const Potential&, const StepSchedule&, const NoiseModel&,
                                    std::span<const double>, std::size_t);
  std::size_t dim_ = 0;
  std::vector<double> tau_;
  std::vector<double> eps_;
  std::vector<double> h_;
  std::vector<double> x_;
};

/// tau^0 = eps_0, h^0 = 0 and for n >= 0
///   h^{n+1}   = h^n - eps_n h^n / tau^n + eps_n g(X^n, omega^{n+1}) / tau^n
///   X^{n+1}   = X^n - eps_{n+1} h^{n+1}
///   tau^{n+1} = tau^n + eps_{n+1}   (compensated sum)
/// Throws SolverError(NonFiniteState) when the path diverges.
DiscretePath run_recursion(const Potential& pot, const StepSchedule& steps,
                           const NoiseModel& noise, std::span<const double> x0, std::size_t n);

/// max over n of |h^{n+1} - sum_{i<=n} eps_i g_i / tau^n|, scaled by
/// sum_{i<=n} eps_i |g_i| / tau^n (the magnitude the rounding error is
/// proportional to). Recomputes the same noisy gradients.
double drift_identity_residual(const DiscretePath& path, const Potential& pot);

/// Acceleration of the limit equation X'' = -(X' + g(X)) / (t + beta).
/// Throws DomainError when t + beta <= 0.
Vec limiting_ode_rhs(double t, std::span<const double> x, std::span<const double> v, double beta,
                     const Potential& pot);

struct OdeComparison {
  /// sup over tau^n <= horizon of |X^n - X_ode(tau^n - beta)|.
  double sup_deviation = 0.0;
  /// RMS of the same differences.
  double rms_deviation = 0.0;
  double horizon = 0.0;
  std::size_t compared = 0;
};

/// Solves tau' = 1, h' = -(h - g(X)) / tau, X' = -h from tau = beta with
/// h = h^1 (the first averaged drift) and X = X^0, then compares X^n with the
/// solution at clock tau^n.
/// beta defaults to tau^0 = eps_0.
OdeComparison compare_to_ode(const DiscretePath& path, const Potential& pot, double horizon,
                             double beta = -1.0);

/// G(X^n) + tau^n |h^n|^2 / 2: nonincreasing along the limit equation
/// (its derivative is -|h|^2 / 2).
double path_lyapunov(const DiscretePath& path, const Potential& pot, std::size_t n);
/// G(X^n) + |h^n|^2 / 2.
double path_energy(const DiscretePath& path, const Potential& pot, std::size_t n);

}  // namespace vdamp
