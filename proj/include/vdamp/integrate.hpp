#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vdamp/dense_output.hpp"
#include "vdamp/ode.hpp"
#include "vdamp/potential.hpp"
#include "vdamp/schedule.hpp"

namespace vdamp {

struct State {
  double t = 0.0;
  Vec x;
  Vec v;
};

/// Problem and solver settings for x'' + a(t) x' + grad G(x) = 0.
struct SystemSpec {
  DampingSchedule schedule = DampingSchedule::constant(0.0);
  Potential potential = Potential::zero();
  Vec x0;
  Vec v0;
  double t_end = 1.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  std::size_t max_steps = 20'000'000;
  /// Upper bound on stored samples; the stride doubles whenever it is hit.
  std::size_t max_samples = 100'000;
  /// Direction d of the monitored velocity <v, d>. Empty means e_0.
  Vec event_dir;
  /// > 0 switches to fixed steps of this size (no error control).
  double fixed_step = 0.0;
  /// Keep the continuous extension of every step (needed by dense_eval and
  /// the grid-based diagnostics).
  bool keep_dense = true;
};

struct Sample {
  double t = 0.0;
  Vec x;
  Vec v;
  double energy = 0.0;
  /// Running integral of a |x'|^2 from 0 to t.
  double dissipation = 0.0;
};

struct Event {
  std::size_t index = 0;
  double t = 0.0;
  Vec x;
  Vec v;
  double energy = 0.0;
  /// +1 when <v, d> goes from negative to positive, -1 otherwise.
  int direction = 0;
};

/// Immutable result of integrate(). The continuous extension stores the
/// augmented state [x (n), v (n), dissipation (1)].
class Trajectory {
 public:
  const SystemSpec& spec() const noexcept { return spec_; }
  std::size_t dim() const noexcept { return spec_.x0.size(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  const SolverStats& stats() const noexcept { return stats_; }
  const DenseOutput& dense() const noexcept { return dense_; }
  const Vec& event_direction() const noexcept { return event_dir_; }
  bool stationary() const noexcept { return stationary_; }
  /// Sample stride in accepted steps at the end of the run.
  std::size_t stride() const noexcept { return stride_; }

  double t_begin() const noexcept { return 0.0; }
  double t_end() const noexcept { return spec_.t_end; }

  /// Interpolated state; throws DomainError outside [0, t_end] or when the
  /// continuous extension was not kept.
  State at(double t) const;
  double position(double t, std::size_t axis = 0) const;
  double energy_at(double t) const;
  double dissipation_at(double t) const;

 private:
  friend Trajectory integrate(const SystemSpec& spec);

  SystemSpec spec_;
  std::vector<Sample> samples_;
  std::vector<Event> events_;
  SolverStats stats_;
  DenseOutput dense_;
  Vec event_dir_;
  bool stationary_ = false;
  std::size_t stride_ = 1;
};

/// Step used by the singular-start series.
inline constexpr double kBootstrapStep = 1e-6;

/// Series start for a(t) = c / t: x(h0) = x0 - g(x0) h0^2 / (2(1+c)),
/// v(h0) = -g(x0) h0 / (1+c). The neglected terms are O(h0^4) in x and
/// O(h0^3) in v. Requires PowerLaw with offset 0, gamma = 1 and v0 = 0.
State bootstrap_singular_start(const SystemSpec& spec, double h0 = kBootstrapStep);

/// Solves the system on [0, t_end]. Pure: no shared state.
Trajectory integrate(const SystemSpec& spec);

State dense_eval(const Trajectory& traj, double t);

/// Energy 1/2 |v|^2 + G(x).
double energy(const Potential& pot, std::span<const double> x, std::span<const double> v);

}  // namespace vdamp
