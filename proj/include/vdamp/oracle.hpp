#pragma once

#include "vdamp/schedule.hpp"
#include "vdamp/potential.hpp"

namespace vdamp {

/// Gamma function, Lanczos approximation (g = 7, 9 terms) with reflection
/// below 1/2. Relative error near 1e-15 on [0.5, 10].
double lanczos_gamma(double x);

enum class BesselMethod { Series, Asymptotic, ClosedFormHalfInteger };

struct BesselEval {
  double order = 0.0;
  double argument = 0.0;
  double value = 0.0;
  BesselMethod method = BesselMethod::Series;
  double error_estimate = 0.0;
};

/// Argument at which bessel_j switches from the power series to the Hankel
/// asymptotic expansion.
inline constexpr double kBesselSwitch = 30.0;

/// J_nu(t) for nu in [0, 3], t >= 0.
BesselEval bessel_j_eval(double nu, double t);
inline double bessel_j(double nu, double t) { return bessel_j_eval(nu, t).value; }

/// Solution of x'' + (c/t) x' + x = 0 with x(0) = 1, x'(0) = 0, i.e.
/// 2^nu Gamma(nu+1) t^{-nu} J_nu(t) with nu = (c-1)/2. c in (0, 7].
double linear_regular_solution(double c, double t);

/// Decaying shape t^{-c/2} e^{-t} of solutions of y'' + (c/t) y' - y = 0,
/// unit constant. Requires t >= 10.
double modified_decay_asymptote(double c, double t);

struct OracleState {
  double t = 0.0;
  Vec x;
  Vec v;
};

/// Exact solution for G = 0: v(t) = v0 e^{-int_0^t a}, x(t) = x0 + v0 int_0^t e^{-int_0^s a} ds.
OracleState zero_potential_solution(const DampingSchedule& sched, std::span<const double> x0,
                                    std::span<const double> v0, double t);

struct PowerLawSolution {
  double x = 0.0;
  double v = 0.0;
  double damping = 0.0;  // required c = 1 + beta + 1/beta
};

/// x(t) = (t+1)^{-beta} solves x'' + c/(t+1) x' + x^{1+2/beta} = 0.
PowerLawSolution power_law_exact(double beta, double t);

struct Envelope {
  double value = 0.0;
  /// Grid verdict on the envelope hypotheses (nonincreasing, a -> 0, a' -> 0,
  /// a'' + a a' of one sign on the tail). False means a warning.
  bool hypotheses_hold = true;
};

/// exp(-int_0^t a), the linear-case decay envelope of |x|^2 + |x'|^2.
Envelope linear_envelope(const DampingSchedule& sched, double t);

}  // namespace vdamp
