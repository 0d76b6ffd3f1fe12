#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdamp/error.hpp"
#include "vdamp/schedule.hpp"

using namespace vdamp;
using doctest::Approx;

TEST_CASE("a(t) on the built-in kinds") {
  CHECK(a_at(DampingSchedule::power_law(2.0, 1.0, 1.0), 1.0) == 1.0);
  CHECK(a_at(DampingSchedule::constant(0.5), 1e3) == 0.5);
  CHECK(a_at(DampingSchedule::power_law(1.0, 0.5, 1.0), 3.0) == 0.5);
}

TEST_CASE("domain errors") {
  const auto singular = DampingSchedule::power_law(1.0, 1.0, 0.0);
  CHECK(singular.singular_at_zero());
  CHECK_THROWS_AS(singular(0.0), DomainError);
  CHECK_THROWS_AS(DampingSchedule::constant(1.0)(-1.0), DomainError);
  CHECK_THROWS_AS(DampingSchedule::power_law(1.0, 2.0, 0.0), DomainError);
  CHECK_THROWS_AS(DampingSchedule::power_law(-1.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(DampingSchedule::constant(-0.1), DomainError);
  CHECK_THROWS_AS(integral_a(DampingSchedule::constant(1.0), 2.0, 1.0), DomainError);
}

TEST_CASE("power-law derivative is analytic") {
  for (double c : {0.5, 1.0, 3.0})
    for (double g : {0.5, 1.0, 2.0})
      for (double t : {0.0, 0.3, 7.0, 1e4}) {
        const auto s = DampingSchedule::power_law(c, g, 1.0);
        CHECK(s.derivative(t) == Approx(-c * g / std::pow(t + 1.0, g + 1.0)).epsilon(1e-14));
        CHECK_FALSE(s.derivative_is_numeric());
      }
}

TEST_CASE("custom schedule without a derivative falls back to central differences") {
  const auto s = DampingSchedule::custom([](double t) { return 1.0 / (1.0 + t * t); }, nullptr, true);
  CHECK(s.derivative_is_numeric());
  for (double t : {0.5, 2.0, 40.0}) {
    const double exact = -2.0 * t / std::pow(1.0 + t * t, 2);
    CHECK(s.derivative(t) == Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("integral_a closed forms") {
  CHECK(integral_a(DampingSchedule::power_law(1.0, 1.0, 1.0), 0.0, std::numbers::e - 1.0) ==
        Approx(1.0).epsilon(1e-15));
  CHECK(integral_a(DampingSchedule::constant(2.0), 0.0, 5.0) == 10.0);
  CHECK(integral_a(DampingSchedule::power_law(1.0, 0.5, 1.0), 0.0, 3.0) == Approx(2.0).epsilon(1e-15));
  CHECK(integral_a(DampingSchedule::constant(2.0), 3.0, 3.0) == 0.0);
}

TEST_CASE("custom integral uses adaptive quadrature") {
  const auto s = DampingSchedule::custom([](double t) { return std::exp(-t); },
                                         [](double t) { return -std::exp(-t); }, true);
  CHECK(integral_a(s, 0.0, 3.0) == Approx(1.0 - std::exp(-3.0)).epsilon(1e-10));
  const auto loglog = loglog_schedule();
  const double direct = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double t) { return 1.0 / ((t + 1.0) * std::log(std::log(t + 3.0))); }, 0.0, 50.0, 15, 1e-13);
  CHECK(integral_a(loglog, 0.0, 50.0) == Approx(direct).epsilon(1e-10));
}

TEST_CASE("decay kernel values") {
  CHECK(decay_kernel(DampingSchedule::power_law(2.0, 1.0, 1.0), 3.0) == Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(decay_kernel(DampingSchedule::constant(1.0), std::log(2.0)) == Approx(0.5).epsilon(1e-15));
  for (const auto& s : {DampingSchedule::constant(3.0), DampingSchedule::power_law(2.0, 0.5, 1.0),
                        DampingSchedule::power_law(1.0, 1.0, 0.0), loglog_schedule()})
    CHECK(decay_kernel(s, 0.0) == 1.0);
}

TEST_CASE("kernel times exp(integral) is one on a log grid") {
  for (const auto& s : {DampingSchedule::constant(0.7), DampingSchedule::power_law(1.0, 1.0, 1.0),
                        DampingSchedule::power_law(2.0, 0.5, 1.0), DampingSchedule::power_law(0.5, 2.0, 1.0),
                        DampingSchedule::power_law(3.0, 1.0, 2.0)}) {
    for (double t = 1e-3; t <= 1e5; t *= 1.7) {
      const double I = integral_a(s, 0.0, t);
      if (I > 700.0) continue;  // kernel underflows
      CHECK(decay_kernel(s, t) * std::exp(I) == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("integral_a is additive") {
  const auto custom = DampingSchedule::custom([](double t) { return 2.0 / (1.0 + t); },
                                              [](double t) { return -2.0 / ((1.0 + t) * (1.0 + t)); }, true);
  for (const auto& s : {DampingSchedule::constant(0.7), DampingSchedule::power_law(1.0, 1.0, 1.0),
                        DampingSchedule::power_law(2.0, 0.5, 1.0), custom, loglog_schedule()}) {
    for (double t0 : {0.0, 0.5, 10.0})
      for (double t1 : {1.0, 30.0})
        for (double t2 : {100.0, 2500.0}) {
          if (t1 < t0) continue;
          const double whole = integral_a(s, t0, t2);
          CHECK(integral_a(s, t0, t1) + integral_a(s, t1, t2) == Approx(whole).epsilon(1e-10));
        }
  }
}

TEST_CASE("classification of the examples") {
  const auto c1 = classify(DampingSchedule::power_law(1.0, 1.0, 1.0));
  CHECK(c1.integral_a_diverges);
  CHECK_FALSE(c1.exp_integral_finite);
  CHECK(c1.analytic);
  const auto c2 = classify(DampingSchedule::power_law(2.0, 1.0, 1.0));
  CHECK(c2.integral_a_diverges);
  CHECK(c2.exp_integral_finite);
  const auto k = classify(DampingSchedule::constant(1.0));
  CHECK(k.integral_a_diverges);
  CHECK(k.exp_integral_finite);
  CHECK(k.bounded_below);
}

TEST_CASE("power-law exp-integral flag: gamma < 1, or gamma = 1 and c > 1") {
  for (double c : {0.25, 0.5, 1.0, 1.5, 2.0, 4.0})
    for (double g : {0.0, 0.3, 0.5, 0.99, 1.0, 1.01, 2.0})
      for (double s0 : {1.0, 2.5}) {
        const auto f = classify(DampingSchedule::power_law(c, g, s0));
        CHECK(f.exp_integral_finite == (g < 1.0 || (g == 1.0 && c > 1.0)));
        if (f.bounded_below) CHECK(f.integral_a_diverges);
        if (f.exp_integral_finite) CHECK(f.integral_a_diverges);
      }
}

namespace {

// int_0^T exp(-int_0^t a) dt by decade-wise Gauss-Kronrod on the closed-form kernel.
double kernel_integral(double c, double g, double T) {
  auto kernel = [c, g](double t) {
    const double I = g == 1.0 ? c * std::log1p(t)
                              : c * (std::pow(1.0 + t, 1.0 - g) - 1.0) / (1.0 - g);
    return std::exp(-I);
  };
  double sum = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(kernel, 0.0, 1.0, 15, 1e-12);
  for (double lo = 1.0; lo < T; lo *= 10.0)
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(kernel, lo, std::min(10 * lo, T),
                                                                         15, 1e-12);
  return sum;
}

}  // namespace

TEST_CASE("exp-integral flag agrees with direct quadrature up to 1e6") {
  for (double c : {0.5, 1.0, 2.0})
    for (double g : {0.5, 1.0, 2.0}) {
      const bool finite = classify(DampingSchedule::power_law(c, g, 1.0)).exp_integral_finite;
      const double i4 = kernel_integral(c, g, 1e4);
      const double i5 = kernel_integral(c, g, 1e5);
      const double i6 = kernel_integral(c, g, 1e6);
      CAPTURE(c);
      CAPTURE(g);
      if (finite) {
        CHECK(i6 - i4 <= 1e-3 * i6);
      } else {
        // Still growing by a non-vanishing amount per decade.
        CHECK(i5 - i4 > 1.0);
        CHECK(i6 - i5 > 1.0);
      }
    }
}

TEST_CASE("loglog example: faster than c/(t+1) decay, log condition still holds") {
  const auto s = loglog_schedule();
  const auto f = classify(s);
  CHECK_FALSE(f.analytic);
  CHECK(f.integral_a_diverges);
  CHECK(f.slow_log_condition);
  CHECK(s.declared_nonincreasing());
  for (double t = 1.0; t < 1e6; t *= 3.0) CHECK(s(t) >= s(3.0 * t));
  CHECK(s.derivative(10.0) == Approx((s(10.0 + 1e-5) - s(10.0 - 1e-5)) / 2e-5).epsilon(1e-6));
}

TEST_CASE("custom nonincreasing declaration is spot-checked") {
  CHECK_THROWS_AS(DampingSchedule::custom([](double t) { return t; }, nullptr, true), DomainError);
  CHECK_THROWS_AS(DampingSchedule::custom([](double) { return -1.0; }, nullptr, false), DomainError);
}
