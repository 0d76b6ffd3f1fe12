#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vdamp/integrate.hpp"

namespace vdamp {

/// Paired (t, value) columns.
struct Series {
  std::vector<double> t;
  std::vector<double> value;

  std::size_t size() const noexcept { return t.size(); }
  bool empty() const noexcept { return t.empty(); }
  void push(double tt, double v) {
    t.push_back(tt);
    value.push_back(v);
  }
};

/// min G for the reference: the potential's known minimum, or the smallest
/// sampled G(x) when none is known (`exact` = false).
struct MinReference {
  double value = 0.0;
  bool exact = true;
};
MinReference min_reference(const Trajectory& traj);

/// E(t) - minG at every stored sample. Values are clamped at 0 from below.
Series energy_gap_series(const Trajectory& traj, double min_g);

/// |x|^2 + |v|^2 at every stored sample.
Series phase_norm_series(const Trajectory& traj);

struct WeightedIntegral {
  double value = 0.0;
  Series running;
};

/// int a(t) (E(t) - minG) dt, Gauss quadrature on the continuous extension
/// (trapezoid over the samples when it was not kept). On a
/// schedule singular at 0 the quadrature starts at the first positive sample.
WeightedIntegral weighted_energy_integral(const Trajectory& traj, double min_g);

struct LowerBoundResidual {
  double min_slack = 0.0;
  double t_at_min = 0.0;
};

/// min over samples of (E - minG)(t) - (E - minG)(0) exp(-2 int_0^t a).
LowerBoundResidual lower_bound_residual(const Trajectory& traj, double min_g);

enum class BoundRegime { K1, K2 };

struct UpperBoundOptions {
  /// Ratios are tracked from here on (default: max(1, t_end / 10^4)).
  std::optional<double> t_from;
  /// Throw DomainError when the differential inequality fails on the grid.
  bool enforce_hypothesis = true;
};

struct UpperBoundResult {
  bool pass = false;
  bool hypothesis_holds = false;
  /// Rate m = min(1 / (theta + 1/2), K) in regime K1, unused in K2.
  double rate = 0.0;
  /// Fitted constant: max ratio over [t_from, t_end].
  double constant = 0.0;
  /// max ratio over the last decade [t_end / 10, t_end].
  double last_decade_max = 0.0;
  /// max ratio over [t_from, t_end / 10].
  double early_max = 0.0;
};

/// Regime K1: ratio gap(t) exp(m int_0^t a), hypothesis a' + K a^2 <= 0.
/// Regime K2: ratio gap(t) / a(t),              hypothesis a' + K a^2 >= 0,
///            K in (0, 1 / (theta + 1/2)].
/// Passes when the constant is finite and last_decade_max <= 2 early_max.
UpperBoundResult upper_bound_check(const Trajectory& traj, double min_g, double theta,
                                   BoundRegime regime, double k,
                                   const UpperBoundOptions& opts = {});

/// Grid check of a' + k a^2 <= 0 (sign = -1) or >= 0 (sign = +1) on [t0, t1].
bool differential_inequality_holds(const DampingSchedule& sched, double k, int sign, double t0,
                                   double t1);

enum class RateModel { PowerLaw, ExponentialInIntegralOfA };

struct RateFit {
  double t0 = 0.0;
  double t1 = 0.0;
  RateModel model = RateModel::PowerLaw;
  /// PowerLaw: slope of ln(value) against ln t.
  /// ExponentialInIntegralOfA: slope of ln(value) against -int_0^t a.
  double exponent = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::size_t count = 0;
};

/// Least-squares fit over samples with t in [t0, t1]. Needs >= 30 points,
/// all positive. `sched` is required for ExponentialInIntegralOfA.
RateFit rate_fit(const Series& series, double t0, double t1, RateModel model,
                 const DampingSchedule* sched = nullptr);

/// (1/T) int_0^T x(t) dt, exact on the quartic continuous extension.
Vec cesaro_mean(const Trajectory& traj, double horizon);

struct DensityReport {
  Vec reference;
  double radius = 0.0;
  double grid_step = 0.0;
  std::vector<double> horizons;
  std::vector<double> fractions;
};

/// Fraction of [0, T] with |x(t) - x*| > eps, midpoint rule on a uniform
/// grid with step <= 0.01.
DensityReport occupation_density(const Trajectory& traj, std::span<const double> reference,
                                 double eps, std::span<const double> horizons);

/// Occupation fraction of an explicit function w on [0, T]: |{t <= T : w(t) > eps}| / T.
double occupation_fraction(const std::function<double(double)>& w, double eps, double horizon,
                           double step = 0.01);

/// Per-axis (min, max) of x over [t0, t1], scanned on a grid of step <= 0.01
/// plus turning points recorded as events.
std::vector<Interval> extent(const Trajectory& traj, double t0, double t1);

/// extent over the final `tail_fraction` of the run.
std::vector<Interval> omega_limit_extent(const Trajectory& traj, double tail_fraction);

/// Diameter of {x(t) : t in [t0, t1]}, as the largest projected width over
/// 180 evenly spaced directions (2D) or the largest axis width otherwise.
double tail_diameter(const Trajectory& traj, double t0, double t1);

/// max |v(t)| over [t0, t1] on the scan grid.
double max_speed(const Trajectory& traj, double t0, double t1);

struct GapReport {
  Series gaps;  // (t_i, t_{i+1} - t_i)
  /// Least-squares slope of gap against ln(1 + t_i).
  double log_slope = 0.0;
  /// max over i of gap / (1 + ln(1 + t_i)).
  double max_ratio = 0.0;
};

/// Throws DomainError with fewer than 2 events.
GapReport sign_change_gaps(const Trajectory& traj);

/// max gap / (1 + ln(1 + t_i)) over events with t_i in [t0, t1]; 0 if none.
double max_gap_ratio(const Trajectory& traj, double t0, double t1);

/// Number of events with t in [t0, t1].
std::size_t event_count(const Trajectory& traj, double t0, double t1);

enum class Verdict { ConvergesToMin, ConvergesToMax, Converged, NotConverged, Undetermined };

const char* to_string(Verdict v) noexcept;

struct LimitClassification {
  double horizon = 0.0;
  Vec limit;
  bool limit_exists = false;
  /// Tail criteria not met but the oscillation envelope is contracting.
  bool extrapolated = false;
  std::optional<CriticalPoint> nearest;
  double distance_to_nearest = 0.0;
  std::size_t sign_changes = 0;
  std::size_t sign_changes_final_fifth = 0;
  double tail_width = 0.0;
  double tail_speed = 0.0;
  double contraction = 0.0;  // width [T/2, T] / width [T/20, T/10]
  Verdict verdict = Verdict::Undetermined;
};

struct ClassifyOptions {
  double tail_width_tol = 1e-3;
  double tail_speed_tol = 1e-3;
  double match_tol = 1e-2;
};

/// Finite-horizon reading of the 1D dichotomy: a limit that is a local
/// minimum is approached with infinitely many velocity sign changes, a limit
/// that is a local maximum with finitely many.
LimitClassification classify_limit(const Trajectory& traj, const Potential& pot,
                                   const ClassifyOptions& opts = {});

}  // namespace vdamp
