#include "vdamp/oracle.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

using std::numbers::pi;

// Quad precision: at t = 30 the alternating terms reach 1e11 while the sum is
// O(0.1), so long double would leave only about 1e-8 absolute accuracy.
using Quad = __float128;
constexpr double kQuadEps = 1.925929944387235853e-34;

Quad quad_abs(Quad x) { return x < 0 ? -x : x; }

struct SeriesResult {
  double sum;
  double max_term;
  int terms;
};

// sum_k (-1)^k (t/2)^{2k} / (k! (nu+1)_k), Neumaier-compensated.
SeriesResult normalized_series(double nu, double t) {
  const Quad q = static_cast<Quad>(t) * t / 4;
  Quad term = 1, sum = 1, comp = 0, max_term = 1;
  int k = 0;
  for (; k < 1000; ++k) {
    term *= -q / ((k + Quad(1)) * (k + Quad(1) + nu));
    const Quad s = sum + term;
    if (quad_abs(sum) >= quad_abs(term)) comp += (sum - s) + term;
    else comp += (term - s) + sum;
    sum = s;
    if (quad_abs(term) > max_term) max_term = quad_abs(term);
    if (k > q && quad_abs(term) < Quad(1e-30) * max_term) break;
  }
  return {static_cast<double>(sum + comp), static_cast<double>(max_term), k + 1};
}

struct HankelResult {
  double p;
  double q;
  double last_term;
};

// Hankel P and Q series, truncated at the smallest term.
HankelResult hankel_pq(double nu, double t) {
  const double mu = 4.0 * nu * nu;
  double a = 1.0;  // a_k(nu) / t^k
  double p = 1.0, q = 0.0, prev = 1.0;
  double last = 0.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= (mu - odd * odd) / (k * 8.0 * t);
    const double mag = std::abs(a);
    if (mag == 0.0) {
      last = 0.0;
      break;
    }
    if (mag > prev) break;
    // Sign pattern: P = a0 - a2 + a4 ..., Q = a1 - a3 + a5 ...
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) p += sign * a;
    else q += sign * a;
    prev = mag;
    last = mag;
    if (mag < 1e-17) break;
  }
  return {p, q, last};
}

double hankel_j(double nu, double t, double* err) {
  const auto [p, q, last] = hankel_pq(nu, t);
  const double omega = t - 0.5 * nu * pi - 0.25 * pi;
  const double amp = std::sqrt(2.0 / (pi * t));
  if (err) *err = amp * last + 4.0 * DBL_EPSILON * amp;
  return amp * (p * std::cos(omega) - q * std::sin(omega));
}

}  // namespace

double lanczos_gamma(double x) {
  static constexpr double kG = 7.0;
  static constexpr double kCoef[] = {0.99999999999980993,  676.5203681218851,
                                     -1259.1392167224028,  771.32342877765313,
                                     -176.61502916214059,  12.507343278686905,
                                     -0.13857109526572012, 9.9843695780195716e-6,
                                     1.5056327351493116e-7};
  if (x < 0.5) {
    if (x == std::floor(x)) throw DomainError("gamma pole at non-positive integer");
    return pi / (std::sin(pi * x) * lanczos_gamma(1.0 - x));
  }
  x -= 1.0;
  double acc = kCoef[0];
  for (int i = 1; i < 9; ++i) acc += kCoef[i] / (x + i);
  const double t = x + kG + 0.5;
  return std::sqrt(2.0 * pi) * std::pow(t, x + 0.5) * std::exp(-t) * acc;
}

BesselEval bessel_j_eval(double nu, double t) {
  if (!(nu >= 0.0 && nu <= 3.0)) throw DomainError("bessel_j: order must lie in [0, 3]");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("bessel_j: argument must be finite and >= 0");
  BesselEval out;
  out.order = nu;
  out.argument = t;

  if (nu == 0.5) {
    out.method = BesselMethod::ClosedFormHalfInteger;
    out.value = t == 0.0 ? 0.0 : std::sqrt(2.0 / (pi * t)) * std::sin(t);
    out.error_estimate = 4.0 * DBL_EPSILON;
    return out;
  }
  if (t == 0.0) {
    out.value = nu == 0.0 ? 1.0 : 0.0;
    return out;
  }
  if (t <= kBesselSwitch) {
    const auto s = normalized_series(nu, t);
    const double pref = std::pow(0.5 * t, nu) / lanczos_gamma(nu + 1.0);
    out.method = BesselMethod::Series;
    out.value = s.sum * pref;
    out.error_estimate = s.max_term * kQuadEps * s.terms * pref + 4.0 * DBL_EPSILON * std::abs(out.value);
    return out;
  }
  out.method = BesselMethod::Asymptotic;
  out.value = hankel_j(nu, t, &out.error_estimate);
  return out;
}

double linear_regular_solution(double c, double t) {
  if (!(c > 0.0 && c <= 7.0)) throw DomainError("linear_regular_solution: c must lie in (0, 7]");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("linear_regular_solution: t must be >= 0");
  const double nu = 0.5 * (c - 1.0);
  if (t <= kBesselSwitch) return normalized_series(nu, t).sum;
  // 2^nu Gamma(nu+1) t^{-nu} J_nu(t)
  const double scale = std::pow(2.0 / t, nu) * lanczos_gamma(nu + 1.0);
  return scale * hankel_j(nu, t, nullptr);
}

double modified_decay_asymptote(double c, double t) {
  if (!(c >= 0.0)) throw DomainError("modified_decay_asymptote: c must be >= 0");
  if (!(t >= 10.0)) throw DomainError("modified_decay_asymptote: needs t >= 10 (asymptotic regime)");
  return std::pow(t, -0.5 * c) * std::exp(-t);
}

OracleState zero_potential_solution(const DampingSchedule& sched, std::span<const double> x0,
                                    std::span<const double> v0, double t) {
  if (!(t >= 0.0)) throw DomainError("zero_potential_solution: t must be >= 0");
  if (x0.size() != v0.size()) throw DomainError("zero_potential_solution: x0/v0 size mismatch");

  // displacement factor D(t) = int_0^t exp(-int_0^s a) ds
  double disp = 0.0;
  const double kernel = decay_kernel(sched, t);
  if (t > 0.0) {
    switch (sched.kind()) {
      case ScheduleKind::Constant: {
        const double g = sched.level();
        disp = g == 0.0 ? t : -std::expm1(-g * t) / g;
        break;
      }
      case ScheduleKind::PowerLaw:
        if (sched.exponent() == 1.0 && sched.offset() > 0.0) {
          const double s = sched.offset();
          const double c = sched.amplitude();
          if (c == 1.0) disp = s * std::log1p(t / s);
          else disp = std::pow(s, c) * (std::pow(s + t, 1.0 - c) - std::pow(s, 1.0 - c)) / (1.0 - c);
          break;
        }
        if (sched.exponent() == 0.0) {
          const double g = sched.amplitude();
          disp = -std::expm1(-g * t) / g;
          break;
        }
        [[fallthrough]];
      case ScheduleKind::Custom: {
        if (sched.singular_at_zero() && std::isinf(integral_a(sched, 0.0, std::min(t, 1.0)))) {
          disp = 0.0;
          break;
        }
        // Piecewise so each panel sees a smooth kernel; the running log-kernel
        // avoids re-integrating a from 0 at every node.
        double lo = 0.0, log_k = 0.0;
        double hi = std::min(t, 1.0);
        while (lo < t) {
          const double base = log_k;
          const double start = lo;
          const auto f = [&](double s) { return std::exp(base - integral_a(sched, start, s)); };
          disp += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, lo, hi, 20, 1e-13);
          log_k -= integral_a(sched, lo, hi);
          lo = hi;
          hi = std::min(t, hi * 2.0);
        }
        break;
      }
    }
  }

  OracleState out;
  out.t = t;
  out.x.resize(x0.size());
  out.v.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    out.x[i] = x0[i] + v0[i] * disp;
    out.v[i] = v0[i] * kernel;
  }
  return out;
}

PowerLawSolution power_law_exact(double beta, double t) {
  if (!(beta > 0.0)) throw DomainError("power_law_exact: beta must be > 0");
  if (!(t >= 0.0)) throw DomainError("power_law_exact: t must be >= 0");
  const double base = t + 1.0;
  return {std::pow(base, -beta), -beta * std::pow(base, -beta - 1.0), 1.0 + beta + 1.0 / beta};
}

Envelope linear_envelope(const DampingSchedule& sched, double t) {
  Envelope env;
  env.value = decay_kernel(sched, t);

  constexpr int kGrid = 200;
  const double t_lo = 10.0, t_hi = 1e4;
  const double ratio = std::pow(t_hi / t_lo, 1.0 / (kGrid - 1));
  double prev_a = sched(t_lo);
  int sign = 0;
  bool ok = sched.declared_nonincreasing();
  double s = t_lo;
  for (int i = 0; i < kGrid && ok; ++i, s *= ratio) {
    const double a = sched(s);
    if (a > prev_a * (1.0 + 1e-12)) ok = false;
    prev_a = a;
    if (i >= kGrid / 2) {
      const double h = 1e-4 * s;
      const double a_ddot = (sched.derivative(s + h) - sched.derivative(s - h)) / (2.0 * h);
      const double w = a_ddot + a * sched.derivative(s);
      const int sw = (w > 0.0) - (w < 0.0);
      if (sw != 0) {
        if (sign != 0 && sw != sign) ok = false;
        sign = sw;
      }
    }
  }
  // a -> 0 and a' -> 0 along the grid tail
  const double a_far = sched(t_hi), a_near = sched(t_lo);
  if (!(a_far < 0.5 * a_near)) ok = false;
  if (!(std::abs(sched.derivative(t_hi)) <= std::abs(sched.derivative(t_lo)))) ok = false;
  env.hypotheses_hold = ok;
  return env;
}

}  // namespace vdamp
