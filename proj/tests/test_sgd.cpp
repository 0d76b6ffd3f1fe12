#include <doctest.h>

#include <cmath>
#include <cstring>

#include "vdamp/error.hpp"
#include "vdamp/sgd.hpp"

using namespace vdamp;
using doctest::Approx;

namespace {

const double kOne[] = {1.0};

}  // namespace

TEST_CASE("step schedules") {
  const StepSchedule c = StepSchedule::constant(1e-3);
  CHECK(c(0) == 1e-3);
  CHECK(c(12345) == 1e-3);
  CHECK(c.sum_diverges());
  CHECK_FALSE(c.higher_power_summable());
  const StepSchedule p = StepSchedule::power_decay(0.1, 0.7);
  CHECK(p(0) == 0.1);
  CHECK(p(9) == Approx(0.1 * std::pow(10.0, -0.7)).epsilon(1e-15));
  CHECK(p.sum_diverges());
  CHECK(p.higher_power_summable());
  CHECK(StepSchedule::power_decay(0.1, 1.0).sum_diverges());
  CHECK_THROWS_AS(StepSchedule::power_decay(0.1, 0.5), DomainError);
  CHECK_THROWS_AS(StepSchedule::power_decay(0.1, 1.2), DomainError);
  CHECK_THROWS_AS(StepSchedule::constant(0.0), DomainError);
  CHECK_THROWS_AS(NoiseModel::gaussian(-1.0, 1), DomainError);
}

TEST_CASE("zero drift leaves X fixed") {
  const double x0[] = {0.3, -2.0};
  const DiscretePath p = run_recursion(Potential::zero(2), StepSchedule::constant(1e-2), NoiseModel::none(), x0, 1000);
  for (std::size_t n = 0; n <= 1000; ++n) {
    CHECK(p.x(n)[0] == 0.3);
    CHECK(p.x(n)[1] == -2.0);
  }
  CHECK(compare_to_ode(p, Potential::zero(2), 5.0).sup_deviation == 0.0);
}

TEST_CASE("initialisation and first steps") {
  const StepSchedule s = StepSchedule::constant(1e-3);
  const DiscretePath p = run_recursion(Potential::quadratic(1), s, NoiseModel::none(), kOne, 10);
  CHECK(p.tau(0) == 1e-3);
  CHECK(p.h(0)[0] == 0.0);
  CHECK(p.x(0)[0] == 1.0);
  // h^1 = g(X^0) = 1, X^1 = X^0 - eps_1 h^1.
  CHECK(p.h(1)[0] == Approx(1.0).epsilon(1e-15));
  CHECK(p.x(1)[0] == Approx(1.0 - 1e-3).epsilon(1e-15));
  CHECK(p.steps() == 10);
  CHECK_THROWS_AS(run_recursion(Potential::quadratic(1), s, NoiseModel::none(), kOne, 0), DomainError);
  const double x2[] = {1.0, 1.0};
  CHECK_THROWS_AS(run_recursion(Potential::quadratic(1), s, NoiseModel::none(), x2, 10), DomainError);
}

TEST_CASE("h is the eps-weighted mean of past gradients") {
  const StepSchedule s = StepSchedule::constant(1e-3);
  const std::size_t N = 100000;
  const DiscretePath p = run_recursion(Potential::quadratic(1), s, NoiseModel::none(), kOne, N);
  // Independent closed form: for the quadratic g(X) = X, so h^{n+1} = sum_{i<=n} eps_i X^i / tau^n.
  // Relative to sum eps_i |X^i| / tau^n, since the mean itself may cross zero.
  double num = 0.0, scale = 0.0, worst = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    num += p.eps(n) * p.x(n)[0];
    scale += p.eps(n) * std::abs(p.x(n)[0]);
    worst = std::max(worst, std::abs(p.h(n + 1)[0] - num / p.tau(n)) / (scale / p.tau(n)));
  }
  CHECK(worst <= 1e-10);
  CHECK(drift_identity_residual(p, Potential::quadratic(1)) <= 1e-10);
  // Decaying power-rule path, also noisy (the identity does not care about the noise).
  const DiscretePath q = run_recursion(Potential::double_well(), StepSchedule::power_decay(0.05, 0.8),
                                       NoiseModel::gaussian(0.5, 3), kOne, 50000);
  CHECK(drift_identity_residual(q, Potential::double_well()) <= 1e-10);
}

TEST_CASE("tau is the exact prefix sum of the steps") {
  const StepSchedule s = StepSchedule::power_decay(0.1, 0.7);
  const std::size_t N = 1000000;
  const DiscretePath p = run_recursion(Potential::quadratic(1), s, NoiseModel::none(), kOne, N);
  __float128 exact = 0;
  for (std::size_t n = 0; n <= N; ++n) {
    exact += p.eps(n);
    if (n % 997 == 0 || n == N) {
      const double rounded = static_cast<double>(exact);
      REQUIRE(std::abs(p.tau(n) - rounded) <= std::nextafter(rounded, 1e300) - rounded);
    }
  }
  for (std::size_t n = 0; n <= N; n += 1013) CHECK(p.eps(n) == s(n));
}

TEST_CASE("seeded paths are bitwise reproducible") {
  const NoiseModel noise = NoiseModel::gaussian(1.0, 7);
  const auto a = run_recursion(Potential::quadratic(1), StepSchedule::constant(1e-3), noise, kOne, 20000);
  const auto b = run_recursion(Potential::quadratic(1), StepSchedule::constant(1e-3), noise, kOne, 20000);
  REQUIRE(a.x_flat().size() == b.x_flat().size());
  CHECK(std::memcmp(a.x_flat().data(), b.x_flat().data(), a.x_flat().size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.h_flat().data(), b.h_flat().data(), a.h_flat().size() * sizeof(double)) == 0);
  const auto c = run_recursion(Potential::quadratic(1), StepSchedule::constant(1e-3), NoiseModel::gaussian(1.0, 8), kOne, 20000);
  CHECK(c.x(20000)[0] != a.x(20000)[0]);
}

TEST_CASE("noise has zero conditional mean at a frozen state") {
  const Potential pot = Potential::double_well();
  const double x[] = {0.4};
  const double sigma = 2.0;
  const NoiseModel noise = NoiseModel::gaussian(sigma, 11);
  double sum = 0.0;
  double g[1];
  for (std::size_t n = 0; n < 10000; ++n) {
    noisy_gradient(pot, noise, n, x, g);
    sum += g[0];
  }
  CHECK(std::abs(sum / 10000 - grad(pot, x)[0]) <= 3 * sigma / 100);
  noisy_gradient(pot, NoiseModel::none(), 5, x, g);
  CHECK(g[0] == grad(pot, x)[0]);
}

TEST_CASE("limit equation right-hand side") {
  const Potential q = Potential::quadratic(1);
  const double x[] = {1.0}, v_slow[] = {-1.0}, v0[] = {0.0};
  CHECK(limiting_ode_rhs(3.0, x, v_slow, 0.5, q)[0] == 0.0);
  CHECK(limiting_ode_rhs(0.5, x, v0, 0.5, q)[0] == -1.0);
  CHECK(limiting_ode_rhs(2.0, x, v0, 0.0, q)[0] == -0.5);
  CHECK_THROWS_AS(limiting_ode_rhs(0.0, x, v0, 0.0, q), DomainError);
  CHECK_THROWS_AS(limiting_ode_rhs(-1.0, x, v0, 0.5, q), DomainError);
}

TEST_CASE("deviation from the limit equation is first order in the step") {
  const Potential q = Potential::quadratic(1);
  const auto p1 = run_recursion(q, StepSchedule::constant(1e-3), NoiseModel::none(), kOne, 20000);
  const auto p2 = run_recursion(q, StepSchedule::constant(5e-4), NoiseModel::none(), kOne, 40000);
  const double d1 = compare_to_ode(p1, q, 20.0).sup_deviation;
  const double d2 = compare_to_ode(p2, q, 20.0).sup_deviation;
  CAPTURE(d1);
  CAPTURE(d2);
  CHECK(d1 / d2 >= 1.6);
  CHECK(d1 / d2 <= 2.4);
  CHECK(compare_to_ode(p1, q, 20.0).compared > 19000);
}

TEST_CASE("power-decay steps track the limit equation") {
  const Potential q = Potential::quadratic(1);
  const auto p = run_recursion(q, StepSchedule::power_decay(0.1, 0.7), NoiseModel::none(), kOne, 1000000);
  REQUIRE(p.tau(p.steps()) >= 20.0);
  const OdeComparison c = compare_to_ode(p, q, 20.0);
  CHECK(c.sup_deviation <= 0.02);
  CHECK(c.rms_deviation <= c.sup_deviation);
  CHECK(c.horizon == 20.0);
}

TEST_CASE("noisy comparison is reported without a threshold") {
  const Potential q = Potential::quadratic(1);
  const auto p = run_recursion(q, StepSchedule::power_decay(0.1, 0.7), NoiseModel::gaussian(0.3, 5), kOne, 200000);
  const OdeComparison c = compare_to_ode(p, q, 5.0);
  CHECK(std::isfinite(c.rms_deviation));
  CHECK(c.rms_deviation > 0.0);
}

TEST_CASE("divergent recursion is reported") {
  // Step 3 on the quadratic: h tracks X while X overshoots by a factor >= 2 each step.
  const Potential steep = Potential::p_power(4.0);
  const double big[] = {50.0};
  CHECK_THROWS_AS(run_recursion(steep, StepSchedule::constant(1.0), NoiseModel::none(), big, 1000), SolverError);
}

// Lyapunov function of the limit system: d/dtau [G + tau |h|^2 / 2] = -|h|^2 / 2.
TEST_CASE("tau-weighted energy is nonincreasing after burn-in") {
  const Potential q = Potential::quadratic(1);
  const auto p = run_recursion(q, StepSchedule::constant(1e-3), NoiseModel::none(), kOne, 100000);
  std::size_t increases = 0;
  for (std::size_t n = 1000; n < p.steps(); ++n) increases += path_lyapunov(p, q, n + 1) > path_lyapunov(p, q, n);
  CHECK(increases == 0);
}

// Stated property for the untimed analogue G + |h|^2 / 2.
TEST_CASE("energy analogue is eventually decreasing on the quadratic") {
  const Potential q = Potential::quadratic(1);
  const auto p = run_recursion(q, StepSchedule::constant(1e-3), NoiseModel::none(), kOne, 100000);
  std::size_t increases = 0;
  for (std::size_t n = 1000; n < p.steps(); ++n) increases += path_energy(p, q, n + 1) > path_energy(p, q, n);
  CHECK(increases == 0);
}
