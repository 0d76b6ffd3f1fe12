#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vdamp/analyze.hpp"
#include "vdamp/error.hpp"
#include "vdamp/integrate.hpp"

using namespace vdamp;
using doctest::Approx;

namespace {

SystemSpec make(DampingSchedule sched, Potential pot, Vec x0, Vec v0, double t_end) {
  SystemSpec s;
  s.schedule = std::move(sched);
  s.potential = std::move(pot);
  s.x0 = std::move(x0);
  s.v0 = std::move(v0);
  s.t_end = t_end;
  return s;
}

const DampingSchedule kInvT = DampingSchedule::power_law(1.0, 1.0, 1.0);

Trajectory j0_run(double t_end) {
  return integrate(make(DampingSchedule::power_law(1.0, 1.0, 0.0), Potential::quadratic(1), {1.0}, {0.0}, t_end));
}

Trajectory stationary_min() { return integrate(make(kInvT, Potential::double_well(), {1.0}, {0.0}, 100.0)); }

// Energy 0.048 < G(0) = 0.25: trapped in the right well.
Trajectory right_well(double t_end) { return integrate(make(kInvT, Potential::double_well(), {1.2}, {0.0}, t_end)); }

Trajectory flat_bottom(double gamma, double t_end) {
  return integrate(make(DampingSchedule::power_law(1.0, gamma, 1.0), Potential::flat_bottom(1), {0.0}, {3.0}, t_end));
}

}  // namespace

TEST_CASE("energy gap series") {
  const Trajectory st = stationary_min();
  for (double g : energy_gap_series(st, 0.0).value) CHECK(g == 0.0);

  const Trajectory j0 = j0_run(1000.0);
  const Series gap = energy_gap_series(j0, 0.0);
  for (std::size_t k = 0; k < gap.size(); ++k) {
    CHECK(gap.value[k] >= 0.0);
    // c = 1: |x|^2 + |v|^2 ~ (2/pi)/t, so the gap is at most ~0.32/t.
    if (gap.t[k] >= 100.0) CHECK(gap.value[k] * gap.t[k] <= 0.5);
  }

  const Trajectory dw = integrate(make(DampingSchedule::constant(1.0), Potential::double_well(), {2.0}, {0.0}, 40.0));
  const Series g = energy_gap_series(dw, 0.0);
  const DampingSchedule one = DampingSchedule::constant(1.0);
  const RateFit fit = rate_fit(g, 10.0, 30.0, RateModel::ExponentialInIntegralOfA, &one);
  // Linearised at +1: roots of l^2 + l + 2 have real part -1/2, so the gap decays like e^{-t}.
  CHECK(fit.exponent == Approx(1.0).epsilon(0.1));
  CHECK(g.value.back() < 1e-12);
}

TEST_CASE("min reference") {
  CHECK(min_reference(stationary_min()).exact);
  CHECK(min_reference(stationary_min()).value == 0.0);
  SystemSpec s = make(kInvT,
                      Potential::custom(
                          1, [](std::span<const double> x) { return std::cosh(x[0]); },
                          [](std::span<const double> x, std::span<double> g) { g[0] = std::sinh(x[0]); }, true,
                          std::nullopt),
                      {1.0}, {0.0}, 50.0);
  const MinReference r = min_reference(integrate(s));
  CHECK_FALSE(r.exact);
  CHECK(r.value >= 1.0);
  CHECK(r.value <= std::cosh(0.3));
}

TEST_CASE("weighted energy integral") {
  CHECK(weighted_energy_integral(stationary_min(), 0.0).value == 0.0);

  // gap = e^{-2t}/2, a = 1: integral over [0, T] is (1 - e^{-2T}) / 4.
  const Trajectory free = integrate(make(DampingSchedule::constant(1.0), Potential::zero(1), {0.0}, {1.0}, 30.0));
  const WeightedIntegral w = weighted_energy_integral(free, 0.0);
  CHECK(w.value == Approx(0.25 * (1 - std::exp(-60.0))).epsilon(1e-4));
  for (std::size_t k = 0; k < w.running.size(); ++k)
    CHECK(w.running.value[k] == Approx(0.25 * (1 - std::exp(-2 * w.running.t[k]))).epsilon(1e-3).scale(1e-6));

  // Quadratic with a = 1/(1+t): integrand ~ t^{-2}, the running integral flattens.
  const Trajectory q = integrate(make(kInvT, Potential::quadratic(1), {1.0}, {0.0}, 1e4));
  const WeightedIntegral wq = weighted_energy_integral(q, 0.0);
  double at_1e3 = 0.0;
  for (std::size_t k = 0; k < wq.running.size(); ++k)
    if (wq.running.t[k] <= 1e3) at_1e3 = wq.running.value[k];
  CHECK(wq.value - at_1e3 <= 1e-3 * wq.value);
  for (std::size_t k = 1; k < wq.running.size(); ++k) CHECK(wq.running.value[k] >= wq.running.value[k - 1]);
}

TEST_CASE("lower bound residual") {
  const Trajectory free = integrate(make(kInvT, Potential::zero(1), {0.0}, {1.0}, 1000.0));
  const auto eq = lower_bound_residual(free, 0.0);
  CHECK(std::abs(eq.min_slack) <= 1e-8);
  // Equality case: the gap is the bound at every sample.
  for (const Sample& s : free.samples())
    CHECK(0.5 * s.v[0] * s.v[0] == Approx(0.5 * std::pow(1 + s.t, -2.0)).epsilon(1e-7));

  CHECK(lower_bound_residual(j0_run(1000.0), 0.0).min_slack >= -1e-8);
  CHECK(lower_bound_residual(right_well(1000.0), 0.0).min_slack >= -1e-8);
  const auto st = lower_bound_residual(stationary_min(), 0.0);
  CHECK(st.min_slack == 0.0);
}

TEST_CASE("upper bound checks") {
  const Trajectory q = integrate(make(kInvT, Potential::quadratic(1), {1.0}, {0.0}, 1e4));
  const auto k1 = upper_bound_check(q, 0.0, 0.5, BoundRegime::K1, 1.0);
  CHECK(k1.pass);
  CHECK(k1.hypothesis_holds);
  CHECK(k1.rate == 1.0);
  CHECK(std::isfinite(k1.constant));

  const Trajectory slow =
      integrate(make(DampingSchedule::power_law(1.0, 0.5, 1.0), Potential::quadratic(1), {1.0}, {0.0}, 1e4));
  const auto k2 = upper_bound_check(slow, 0.0, 0.5, BoundRegime::K2, 1.0);
  CHECK(k2.pass);
  CHECK(k2.hypothesis_holds);

  // Constant damping violates a' + K a^2 <= 0 for every K > 0.
  const Trajectory free = integrate(make(DampingSchedule::constant(1.0), Potential::zero(1), {0.0}, {1.0}, 20.0));
  CHECK_THROWS_AS(upper_bound_check(free, 0.0, 0.5, BoundRegime::K1, 2.0), DomainError);
  UpperBoundOptions relaxed;
  relaxed.enforce_hypothesis = false;
  relaxed.t_from = 1.0;
  for (double k : {0.5, 1.0, 2.0}) {
    const auto r = upper_bound_check(free, 0.0, 0.5, BoundRegime::K1, k, relaxed);
    CAPTURE(k);
    CHECK_FALSE(r.hypothesis_holds);
    CHECK(r.pass);
  }
  // K2 with a regime constant above 1/(theta + 1/2) is rejected.
  CHECK_THROWS_AS(upper_bound_check(slow, 0.0, 0.5, BoundRegime::K2, 1.5), DomainError);
}

TEST_CASE("differential inequality grid check") {
  // a = c/(1+t): a' + K a^2 = (K c^2 - c)/(1+t)^2.
  CHECK(differential_inequality_holds(DampingSchedule::power_law(2.0, 1.0, 1.0), 0.5, -1, 0.0, 1e4));
  CHECK_FALSE(differential_inequality_holds(DampingSchedule::power_law(2.0, 1.0, 1.0), 0.6, -1, 0.0, 1e4));
  CHECK(differential_inequality_holds(DampingSchedule::power_law(2.0, 1.0, 1.0), 0.6, +1, 0.0, 1e4));
  CHECK(differential_inequality_holds(DampingSchedule::constant(1.0), 1.0, +1, 0.0, 1e4));
}

TEST_CASE("rate fits") {
  Series s;
  for (double t = 10.0; t <= 1e4; t *= 1.1) s.push(t, 3.0 / (t * t));
  const RateFit f = rate_fit(s, 10.0, 1e4, RateModel::PowerLaw);
  CHECK(std::abs(f.exponent + 2.0) <= 1e-6);
  CHECK(f.intercept == Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(f.residual_rms <= 1e-9);
  CHECK(f.count >= 30);

  const DampingSchedule half = DampingSchedule::power_law(1.0, 0.5, 1.0);
  Series e;
  for (double t = 1.0; t <= 1e3; t += 5.0) e.push(t, 0.7 * std::exp(-integral_a(half, 0.0, t)));
  CHECK(std::abs(rate_fit(e, 1.0, 1e3, RateModel::ExponentialInIntegralOfA, &half).exponent - 1.0) <= 1e-6);

  const RateFit j = rate_fit(phase_norm_series(j0_run(1000.0)), 100.0, 1000.0, RateModel::PowerLaw);
  CHECK(j.exponent == Approx(-1.0).epsilon(0.05));

  const Trajectory slow = integrate(make(half, Potential::quadratic(1), {1.0}, {0.0}, 1000.0));
  const RateFit h = rate_fit(phase_norm_series(slow), 100.0, 1000.0, RateModel::ExponentialInIntegralOfA, &half);
  CHECK(h.exponent == Approx(1.0).epsilon(0.1));

  Series few;
  for (int k = 1; k <= 10; ++k) few.push(k, 1.0 / k);
  CHECK_THROWS_AS(rate_fit(few, 1.0, 10.0, RateModel::PowerLaw), DomainError);
  Series neg = s;
  neg.value[40] = -1.0;
  CHECK_THROWS_AS(rate_fit(neg, 10.0, 1e4, RateModel::PowerLaw), DomainError);
  CHECK_THROWS_AS(rate_fit(s, 10.0, 1e4, RateModel::ExponentialInIntegralOfA), DomainError);
}

TEST_CASE("Cesaro means") {
  CHECK(cesaro_mean(stationary_min(), 50.0)[0] == Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(cesaro_mean(j0_run(1000.0), 1000.0)[0]) <= 0.05);

  // Free motion x = 1 + t: mean over [0, T] is 1 + T/2, integrated exactly.
  const Trajectory free = integrate(make(DampingSchedule::constant(0.0), Potential::zero(1), {1.0}, {1.0}, 10.0));
  CHECK(cesaro_mean(free, 10.0)[0] == Approx(6.0).epsilon(1e-13));
  CHECK(cesaro_mean(free, 4.0)[0] == Approx(3.0).epsilon(1e-13));
  CHECK_THROWS_AS(cesaro_mean(free, 11.0), DomainError);

  const Trajectory rw = right_well(1e4);
  const double xbar = rw.samples().back().x[0];
  CHECK(xbar == Approx(1.0).epsilon(1e-2));
  for (double T : {1e2, 1e3, 1e4}) {
    const double mean = cesaro_mean(rw, T)[0];
    double tail_sup = 0.0, sup = 0.0;
    for (const Sample& s : rw.samples()) {
      if (s.t > T) break;
      sup = std::max(sup, std::abs(s.x[0] - xbar));
      if (s.t >= T / 2) tail_sup = std::max(tail_sup, std::abs(s.x[0] - xbar));
    }
    CHECK(std::abs(mean - xbar) <= tail_sup + sup * 0.5 + 1e-12);
  }
  CHECK(std::abs(cesaro_mean(rw, 1e4)[0] - 1.0) <= 0.05);
}

TEST_CASE("occupation density") {
  const double one[] = {1.0};
  const double hs[] = {10.0, 100.0};
  for (double f : occupation_density(stationary_min(), one, 1e-6, hs).fractions) CHECK(f == 0.0);

  const Trajectory rw = right_well(1e4);
  const double horizons[] = {1e2, 1e3, 1e4};
  const DensityReport d = occupation_density(rw, one, 0.1, horizons);
  REQUIRE(d.fractions.size() == 3);
  CHECK(d.fractions[2] < d.fractions[0]);
  CHECK(d.fractions[2] < 0.2);
  CHECK(d.grid_step <= 0.01);
  for (double f : d.fractions) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }

  for (double eps : {0.5, 0.1, 0.01})
    for (double T : {100.0, 1000.0})
      CHECK(occupation_fraction([](double t) { return 1.0 / (1.0 + t); }, eps, T) ==
            Approx((1.0 / eps - 1.0) / T).epsilon(1e-3));
}

TEST_CASE("density of step functions with a finite weighted integral") {
  // Unit bumps on [2^k, 2^k + 1]: int w/(t+1) is about sum 2^{-k} < infinity.
  const auto w = [](double t) {
    for (double p = 1.0; p <= t; p *= 2.0)
      if (t < p + 1.0) return 1.0;
    return 0.0;
  };
  double prev = 1.0;
  for (double T : {1e2, 1e3, 1e4}) {
    const double f = occupation_fraction(w, 0.5, T);
    CHECK(f < prev);
    prev = f;
  }
  CHECK(prev < 0.002);
  // Taller bumps weighted by 1/t: w = t on [2^k, 2^k + 1] keeps the fractions identical.
  CHECK(occupation_fraction([&](double t) { return w(t) * (1 + t); }, 0.5, 1e4) == Approx(prev));
}

TEST_CASE("omega-limit extent") {
  const Trajectory rw = right_well(1e4);
  double prev = 1e9;
  for (double T : {1e2, 1e3, 1e4}) {
    const auto ext = extent(rw, 0.9 * T, T);
    CHECK(ext[0].hi - ext[0].lo < prev);
    prev = ext[0].hi - ext[0].lo;
  }

  // Crossing times grow geometrically, so the window spans the last 90% of each horizon.
  for (double T : {1e3, 1e4}) {
    const auto tail = omega_limit_extent(flat_bottom(1.0, T), 0.9);
    CAPTURE(T);
    CHECK(tail[0].lo <= -0.95);
    CHECK(tail[0].hi >= 0.95);
  }

  const Trajectory fb_slow = flat_bottom(0.5, 1e4);
  const auto w2 = extent(fb_slow, 90.0, 1e2), w4 = extent(fb_slow, 9e3, 1e4);
  CHECK(w4[0].hi - w4[0].lo < 1e-3);
  CHECK(w4[0].hi - w4[0].lo < w2[0].hi - w2[0].lo);
  CHECK(tail_diameter(fb_slow, 9e3, 1e4) == Approx(w4[0].hi - w4[0].lo).epsilon(1e-9).scale(1e-12));
  CHECK(max_speed(fb_slow, 9e3, 1e4) < 1e-3);
}

TEST_CASE("tail diameter in two dimensions") {
  // Circle of radius 1 traced by an undamped isotropic oscillator.
  const Trajectory c = integrate(make(DampingSchedule::constant(0.0), Potential::quadratic(2), {1.0, 0.0}, {0.0, 1.0}, 10.0));
  CHECK(tail_diameter(c, 0.0, 10.0) == Approx(2.0).epsilon(1e-3));
  const auto ext = extent(c, 0.0, 10.0);
  // Off the event axis the scan grid (step 0.01) bounds the error by 1 - cos(0.005).
  CHECK(ext[1].lo == Approx(-1.0).epsilon(1.3e-5));
  CHECK(ext[0].lo == Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("sign-change gaps on the J0 run and in a well") {
  const GapReport j = sign_change_gaps(j0_run(200.0));
  for (std::size_t k = 0; k < j.gaps.size(); ++k)
    if (j.gaps.t[k] > 50.0) CHECK(j.gaps.value[k] == Approx(std::numbers::pi).epsilon(0.01));

  const GapReport r = sign_change_gaps(right_well(1e3));
  for (std::size_t k = 0; k < r.gaps.size(); ++k)
    if (r.gaps.t[k] > 500.0) CHECK(r.gaps.value[k] == Approx(std::numbers::pi / std::sqrt(2.0)).epsilon(0.02));

  CHECK_THROWS_AS(sign_change_gaps(stationary_min()), DomainError);
  const Trajectory j0 = j0_run(200.0);
  CHECK(event_count(j0, 0.0, 200.0) == j0.events().size());
  CHECK(event_count(j0, 50.0, 100.0) == Approx(50.0 / std::numbers::pi).epsilon(0.1));
}

// Property stated for every crossing run; FlatBottom has a continuum of
// minima, outside the finitely-many-critical-points setting of the gap bound.
TEST_CASE("FlatBottom gap ratio stays bounded across horizon decades") {
  const Trajectory fb = flat_bottom(1.0, 1e4);
  const double r2 = max_gap_ratio(fb, 0.0, 1e2), r3 = max_gap_ratio(fb, 0.0, 1e3), r4 = max_gap_ratio(fb, 0.0, 1e4);
  CAPTURE(r2);
  CAPTURE(r3);
  CAPTURE(r4);
  CHECK(r4 <= 2.0 * r2);
  CHECK(r3 <= 2.0 * r2);
}

TEST_CASE("limit classification on the standard suite") {
  const LimitClassification dw = classify_limit(right_well(1e4), Potential::double_well());
  CHECK(dw.verdict == Verdict::ConvergesToMin);
  REQUIRE(dw.nearest);
  CHECK(dw.nearest->location[0] == Approx(1.0));
  CHECK(dw.sign_changes_final_fifth > 0);

  const LimitClassification top =
      classify_limit(integrate(make(kInvT, Potential::double_well(), {0.0}, {0.0}, 100.0)), Potential::double_well());
  CHECK(top.verdict == Verdict::ConvergesToMax);
  CHECK(top.sign_changes == 0);
  CHECK(top.limit_exists);

  CHECK(classify_limit(flat_bottom(1.0, 1e4), Potential::flat_bottom(1)).verdict == Verdict::NotConverged);
  const LimitClassification slow = classify_limit(flat_bottom(0.5, 1e4), Potential::flat_bottom(1));
  CHECK(slow.verdict == Verdict::Converged);
  CHECK(slow.limit_exists);

  const LimitClassification k = classify_limit(
      integrate(make(DampingSchedule::constant(1.0), Potential::double_well(), {2.0}, {0.0}, 100.0)), Potential::double_well());
  CHECK(k.limit_exists);
  CHECK(k.verdict == Verdict::ConvergesToMin);

  // Growing event count with horizon.
  const Trajectory rw = right_well(1e4);
  CHECK(event_count(rw, 5e3, 1e4) > 0);
  CHECK(event_count(rw, 0.0, 1e4) > event_count(rw, 0.0, 1e3));
}

TEST_CASE("verdict names") {
  CHECK(std::string(to_string(Verdict::ConvergesToMin)) == "ConvergesToMin");
  CHECK(std::string(to_string(Verdict::NotConverged)) == "NotConverged");
}
