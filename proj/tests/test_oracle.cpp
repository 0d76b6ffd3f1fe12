#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "vdamp/error.hpp"
#include "vdamp/integrate.hpp"
#include "vdamp/oracle.hpp"

using namespace vdamp;
using doctest::Approx;
using std::numbers::pi;

TEST_CASE("Lanczos gamma against the standard library") {
  for (double x = 0.5; x <= 10.0; x += 0.0625)
    CHECK(std::abs(lanczos_gamma(x) / std::tgamma(x) - 1.0) <= 1e-10);
  for (double x : {0.1, 0.25, -0.5, -1.5, -2.7})
    CHECK(lanczos_gamma(x) == Approx(std::tgamma(x)).epsilon(1e-10));
  CHECK(lanczos_gamma(5.0) == Approx(24.0).epsilon(1e-13));
  CHECK_THROWS_AS(lanczos_gamma(-2.0), DomainError);
}

TEST_CASE("Bessel J against std::cyl_bessel_j") {
  for (double nu : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
    for (double t = 0.0; t <= 30.0; t += 0.173) {
      CAPTURE(nu);
      CAPTURE(t);
      const BesselEval e = bessel_j_eval(nu, t);
      CHECK(std::abs(e.value - std::cyl_bessel_j(nu, t)) <= 1e-8);
      CHECK(e.error_estimate <= 1e-8);
    }
    for (double t = 30.5; t <= 2000.0; t *= 1.13) {
      CAPTURE(nu);
      CAPTURE(t);
      const BesselEval e = bessel_j_eval(nu, t);
      CHECK(std::abs(e.value - std::cyl_bessel_j(nu, t)) <= 1e-4);
      CHECK(e.error_estimate <= 1e-4);
    }
  }
}

TEST_CASE("Bessel method switch") {
  CHECK(bessel_j_eval(0.0, kBesselSwitch).method == BesselMethod::Series);
  CHECK(bessel_j_eval(0.0, 30.001).method == BesselMethod::Asymptotic);
  CHECK(bessel_j_eval(1.0, 5.0).method == BesselMethod::Series);
  CHECK(bessel_j_eval(0.5, 100.0).method == BesselMethod::ClosedFormHalfInteger);
  CHECK(bessel_j(0.0, 0.0) == 1.0);
  CHECK(bessel_j(2.0, 0.0) == 0.0);
}

TEST_CASE("half-integer closed form") {
  CHECK(std::abs(bessel_j(0.5, pi)) <= 1e-15);
  // Independent evaluation of the power series at t = 1.
  double series = 0.0;
  for (int k = 0; k < 30; ++k)
    series += std::pow(-1.0, k) * std::pow(0.5, 2 * k + 0.5) / (std::tgamma(k + 1.0) * std::tgamma(k + 1.5));
  CHECK(bessel_j(0.5, 1.0) == Approx(series).epsilon(1e-10));
  CHECK(bessel_j(0.5, 1.0) == Approx(std::sqrt(2.0 / pi) * std::sin(1.0)).epsilon(1e-14));
}

TEST_CASE("series and asymptotic branches agree on the overlap band") {
  // First-correction Hankel form sqrt(2/(pi t)) (cos w - (4nu^2-1)/(8t) sin w)
  // against whichever branch bessel_j picks on [25, 35].
  for (double nu : {0.0, 0.5, 1.0}) {
    for (double t = 25.0; t <= 35.0; t += 0.25) {
      const double w = t - nu * pi / 2 - pi / 4;
      const double asym = std::sqrt(2.0 / (pi * t)) * (std::cos(w) - (4 * nu * nu - 1) / (8 * t) * std::sin(w));
      CHECK(std::abs(bessel_j(nu, t) - asym) <= 1e-4);
    }
  }
}

TEST_CASE("first zero of J0 by bracketing the series") {
  boost::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve([](double t) { return bessel_j(0.0, t); }, 2.0, 3.0,
                                                   boost::math::tools::eps_tolerance<double>(45), it);
  CHECK(0.5 * (r.first + r.second) == Approx(2.404825558).epsilon(1e-9));
}

TEST_CASE("unsupported orders and arguments") {
  CHECK_THROWS_AS(bessel_j(3.5, 1.0), DomainError);
  CHECK_THROWS_AS(bessel_j(-0.5, 1.0), DomainError);
  CHECK_THROWS_AS(bessel_j(0.0, -1.0), DomainError);
  CHECK_THROWS_AS(linear_regular_solution(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(linear_regular_solution(7.5, 1.0), DomainError);
}

TEST_CASE("regular solution of the linear equation") {
  for (double t : {0.0, 0.7, 4.0, 29.0, 45.0})
    CHECK(linear_regular_solution(1.0, t) == Approx(std::cyl_bessel_j(0.0, t)).epsilon(1e-8));
  CHECK(linear_regular_solution(1.0, 0.0) == 1.0);
  CHECK(std::abs(linear_regular_solution(2.0, pi)) <= 1e-15);
  for (double t : {0.3, 1.0, 5.0, 50.0}) CHECK(linear_regular_solution(2.0, t) == Approx(std::sin(t) / t).epsilon(1e-12));
  for (double c : {0.5, 3.0, 7.0}) CHECK(linear_regular_solution(c, 0.0) == 1.0);
}

TEST_CASE("regular solution satisfies x'' + (c/t) x' + x = 0") {
  for (double c : {1.0, 2.0, 3.0}) {
    const double h = 1e-3;
    double worst = 0.0;
    for (double t = 1.0; t <= 50.0; t += 0.0625) {
      // Stay on one branch of the series/asymptotic switch.
      if (std::abs(t - kBesselSwitch) < 2 * h) continue;
      const double xm = linear_regular_solution(c, t - h), x0 = linear_regular_solution(c, t),
                   xp = linear_regular_solution(c, t + h);
      const double xdd = (xp - 2 * x0 + xm) / (h * h);
      const double xd = (xp - xm) / (2 * h);
      worst = std::max(worst, std::abs(xdd + c / t * xd + x0));
    }
    CAPTURE(c);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("large-t envelope of the regular solution decays like t^(-c/2)") {
  for (double c : {1.0, 2.0, 3.0}) {
    const double nu = (c - 1) / 2;
    const double b1 = std::pow(2.0, nu) * std::tgamma(nu + 1);
    const double C = b1 * std::sqrt(2.0 / pi);
    // Peak of |x| t^{c/2} over a window of several periods.
    for (double T : {200.0, 1000.0}) {
      double peak = 0.0;
      for (double t = T; t < T + 7.0; t += 0.001)
        peak = std::max(peak, std::abs(linear_regular_solution(c, t)) * std::pow(t, c / 2));
      CAPTURE(c);
      CHECK(peak == Approx(C).epsilon(0.01));
    }
  }
}

TEST_CASE("modified decay asymptote") {
  const double h = 1e-4;
  const double dlog = (std::log(modified_decay_asymptote(2.0, 100 + h)) - std::log(modified_decay_asymptote(2.0, 100 - h))) / (2 * h);
  CHECK(dlog == Approx(-1.01).epsilon(1e-8));
  double prev_gap = 1.0;
  for (double t : {20.0, 100.0, 600.0}) {
    const double gap = std::abs(modified_decay_asymptote(3.0, t + 1) / modified_decay_asymptote(3.0, t) * std::exp(1.0) - 1.0);
    CHECK(gap <= 2.0 / t);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  for (double t : {10.0, 20.0, 50.0}) CHECK(modified_decay_asymptote(0.0, t) == Approx(std::exp(-t)).epsilon(1e-14));
  CHECK_THROWS_AS(modified_decay_asymptote(1.0, 5.0), DomainError);
}

TEST_CASE("zero-potential solution examples") {
  const double x0[] = {1.0}, v0[] = {1.0};
  const auto free = zero_potential_solution(DampingSchedule::constant(0.0), x0, v0, 7.0);
  CHECK(free.x[0] == 8.0);
  CHECK(free.v[0] == 1.0);
  for (double t : {0.5, 3.0, 100.0}) {
    const auto s = zero_potential_solution(DampingSchedule::power_law(1.0, 1.0, 1.0), x0, v0, t);
    CHECK(s.x[0] == Approx(1.0 + std::log1p(t)).epsilon(1e-12));
    CHECK(s.v[0] == Approx(1.0 / (1.0 + t)).epsilon(1e-12));
  }
  const auto far = zero_potential_solution(DampingSchedule::power_law(2.0, 1.0, 1.0), x0, v0, 1e8);
  CHECK(far.x[0] - 1.0 == Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(zero_potential_solution(DampingSchedule::constant(1.0), x0, v0, -1.0), DomainError);
}

TEST_CASE("zero-potential solution matches the integrator on every built-in schedule") {
  const std::vector<DampingSchedule> scheds = {
      DampingSchedule::constant(0.0),          DampingSchedule::constant(1.0),
      DampingSchedule::power_law(1.0, 1.0, 1.0), DampingSchedule::power_law(3.0, 1.0, 1.0),
      DampingSchedule::power_law(1.0, 0.5, 1.0), DampingSchedule::power_law(0.5, 2.0, 1.0),
      loglog_schedule()};
  for (const auto& s : scheds) {
    SystemSpec spec;
    spec.schedule = s;
    spec.potential = Potential::zero(2);
    spec.x0 = {1.0, -0.5};
    spec.v0 = {1.0, 2.0};
    spec.t_end = 50.0;
    spec.rel_tol = 1e-12;
    spec.abs_tol = 1e-14;
    const Trajectory traj = integrate(spec);
    for (double t : {1.0, 10.0, 50.0}) {
      const auto ref = zero_potential_solution(s, spec.x0, spec.v0, t);
      const State got = traj.at(t);
      CAPTURE(s.name());
      CAPTURE(t);
      for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(got.x[i] - ref.x[i]) <= 1e-8);
        CHECK(std::abs(got.v[i] - ref.v[i]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("exact power-law solution") {
  const auto b1 = power_law_exact(1.0, 2.0);
  CHECK(b1.damping == 3.0);
  CHECK(b1.x == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(power_law_exact(2.0, 0.0).damping == 3.5);
  CHECK(power_law_exact(2.0, 0.0).x == 1.0);
  CHECK(power_law_exact(2.0, 0.0).v == -2.0);
  CHECK_THROWS_AS(power_law_exact(0.0, 1.0), DomainError);
}

TEST_CASE("exact power-law solution has zero residual in the system") {
  for (double beta : {0.5, 1.0, 2.0}) {
    const Potential pot = Potential::signed_power(beta);
    const double c = 1.0 + beta + 1.0 / beta;
    for (double t = 0.0; t <= 100.0; t += 0.5) {
      const auto s = power_law_exact(beta, t);
      // Analytic second derivative.
      const double xdd = beta * (beta + 1) * std::pow(t + 1, -beta - 2);
      const double x[] = {s.x};
      const double residual = xdd + c / (t + 1) * s.v + grad(pot, x)[0];
      CHECK(std::abs(residual) <= 1e-10);
      CHECK(s.damping == Approx(c));
    }
  }
}

TEST_CASE("linear envelope examples") {
  for (double c : {0.5, 1.0, 2.0})
    for (double t : {0.0, 1.0, 10.0, 1e3}) {
      const auto e = linear_envelope(DampingSchedule::power_law(c, 1.0, 1.0), t);
      CHECK(e.value == Approx(std::pow(1 + t, -c)).epsilon(1e-13));
      CHECK(e.hypotheses_hold);
    }
  for (double t : {1.0, 10.0, 100.0})
    CHECK(linear_envelope(DampingSchedule::power_law(1.0, 0.5, 1.0), t).value ==
          Approx(std::exp(-(std::sqrt(1 + t) - 1) / 0.5)).epsilon(1e-12));
  CHECK(linear_envelope(DampingSchedule::constant(0.3), 5.0).value == Approx(std::exp(-1.5)).epsilon(1e-15));
  // a = 1 / (1 + t^2) / 10 + sin-free increasing bump: not nonincreasing.
  const auto bump = DampingSchedule::custom([](double t) { return 1.0 / (1.0 + (t - 5) * (t - 5)); }, nullptr, false);
  CHECK_FALSE(linear_envelope(bump, 3.0).hypotheses_hold);
}
