#include "vdamp/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdamp/error.hpp"

namespace vdamp {

const char* to_string(SolverFailure kind) noexcept {
  switch (kind) {
    case SolverFailure::MaxStepsExceeded: return "MaxStepsExceeded";
    case SolverFailure::StepUnderflow: return "StepUnderflow";
    case SolverFailure::NonFiniteState: return "NonFiniteState";
  }
  return "Unknown";
}

double energy(const Potential& pot, std::span<const double> x, std::span<const double> v) {
  double kin = 0.0;
  for (double vi : v) kin += vi * vi;
  return 0.5 * kin + pot.energy(x);
}

namespace {

void validate(const SystemSpec& spec) {
  const std::size_t n = spec.x0.size();
  if (n == 0) throw DomainError("x0 must not be empty");
  if (spec.v0.size() != n) throw DomainError("x0 and v0 differ in length");
  if (spec.potential.dim() != n)
    throw DomainError("potential dimension " + std::to_string(spec.potential.dim()) +
                      " does not match x0 length " + std::to_string(n));
  if (!(spec.t_end > 0.0) || !std::isfinite(spec.t_end)) throw DomainError("t_end must be > 0");
  if (!(spec.rel_tol > 0.0) || !(spec.abs_tol > 0.0))
    throw DomainError("tolerances must be positive");
  if (spec.max_samples < 2) throw DomainError("max_samples must be >= 2");
  for (double xi : spec.x0)
    if (!std::isfinite(xi)) throw DomainError("x0 has a non-finite entry");
  for (double vi : spec.v0)
    if (!std::isfinite(vi)) throw DomainError("v0 has a non-finite entry");
  if (!spec.event_dir.empty()) {
    if (spec.event_dir.size() != n) throw DomainError("event_dir length does not match x0");
    double norm = 0.0;
    for (double d : spec.event_dir) norm += d * d;
    if (!(norm > 0.0)) throw DomainError("event_dir must be nonzero");
  }
}

int sign_of(double s) { return (s > 0.0) - (s < 0.0); }

}  // namespace

State bootstrap_singular_start(const SystemSpec& spec, double h0) {
  const DampingSchedule& s = spec.schedule;
  if (s.kind() != ScheduleKind::PowerLaw || s.offset() != 0.0)
    throw UnsupportedError("singular start series needs a PowerLaw schedule with offset 0");
  if (s.exponent() != 1.0)
    throw UnsupportedError("singular start series is only available for gamma = 1");
  for (double vi : spec.v0)
    if (vi != 0.0) throw DomainError("a schedule singular at t = 0 requires v0 = 0");
  if (!(h0 > 0.0)) throw DomainError("bootstrap step must be > 0");

  const double c = s.amplitude();
  const Vec g = spec.potential.gradient(spec.x0);
  State out;
  out.t = h0;
  out.x.resize(g.size());
  out.v.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.x[i] = spec.x0[i] - g[i] * h0 * h0 / (2.0 * (1.0 + c));
    out.v[i] = -g[i] * h0 / (1.0 + c);
  }
  return out;
}

Trajectory integrate(const SystemSpec& spec) {
  validate(spec);
  const std::size_t n = spec.x0.size();
  const std::size_t dim = 2 * n + 1;
  const Potential& pot = spec.potential;
  const DampingSchedule& sched = spec.schedule;

  Trajectory traj;
  traj.spec_ = spec;
  traj.event_dir_ = spec.event_dir;
  if (traj.event_dir_.empty()) {
    traj.event_dir_.assign(n, 0.0);
    traj.event_dir_[0] = 1.0;
  }
  const Vec& dir = traj.event_dir_;

  Sample first{0.0, spec.x0, spec.v0, energy(pot, spec.x0, spec.v0), 0.0};

  const Vec g0 = pot.gradient(spec.x0);
  const bool at_rest = std::all_of(spec.v0.begin(), spec.v0.end(), [](double v) { return v == 0.0; });
  const bool critical = std::all_of(g0.begin(), g0.end(), [](double g) { return g == 0.0; });
  if (at_rest && critical) {
    traj.stationary_ = true;
    traj.dense_ = DenseOutput(dim);
    std::vector<double> coef(5 * dim, 0.0);
    std::copy(spec.x0.begin(), spec.x0.end(), coef.begin());
    traj.dense_.push(0.0, spec.t_end, coef);
    std::vector<double> y_end(coef.begin(), coef.begin() + dim);
    traj.dense_.set_final(spec.t_end, y_end);
    traj.samples_.push_back(first);
    Sample last = first;
    last.t = spec.t_end;
    traj.samples_.push_back(std::move(last));
    return traj;
  }

  std::vector<double> y0(dim, 0.0);
  std::copy(spec.x0.begin(), spec.x0.end(), y0.begin());
  std::copy(spec.v0.begin(), spec.v0.end(), y0.begin() + n);
  double t_start = 0.0;

  DenseOutput bootstrap_segment(dim);
  if (sched.singular_at_zero()) {
    const double h0 = std::min(kBootstrapStep, 1e-3 * spec.t_end);
    const State s = bootstrap_singular_start(spec, h0);
    // The series start is quadratic in t for x and the dissipation and
    // linear for v; encode it in the quartic segment form.
    const double c = sched.amplitude();
    std::vector<double> coef(5 * dim, 0.0);
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = s.x[i] - spec.x0[i];
      coef[i] = spec.x0[i];
      coef[dim + i] = dx;
      coef[2 * dim + i] = -dx;
      coef[dim + n + i] = s.v[i];
      g2 += g0[i] * g0[i];
    }
    const double diss = c * g2 * h0 * h0 / (2.0 * (1.0 + c) * (1.0 + c));
    coef[dim + 2 * n] = diss;
    coef[2 * dim + 2 * n] = -diss;
    bootstrap_segment.push(0.0, h0, coef);
    std::copy(s.x.begin(), s.x.end(), y0.begin());
    std::copy(s.v.begin(), s.v.end(), y0.begin() + n);
    y0[2 * n] = diss;
    t_start = h0;
  }

  const bool one_d = n == 1;
  std::vector<double> gbuf(n);
  OdeRhs rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const double a = sched(t);
    if (one_d) {
      const double v = y[1];
      dy[0] = v;
      dy[1] = -a * v - pot.gradient1(y[0]);
      dy[2] = a * v * v;
      return;
    }
    pot.gradient(y.first(n), gbuf);
    double vv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = y[n + i];
      dy[i] = v;
      dy[n + i] = -a * v - gbuf[i];
      vv += v * v;
    }
    dy[2 * n] = a * vv;
  };

  auto make_sample = [&](double t, std::span<const double> y) {
    Sample s;
    s.t = t;
    s.x.assign(y.begin(), y.begin() + n);
    s.v.assign(y.begin() + n, y.begin() + 2 * n);
    s.energy = energy(pot, s.x, s.v);
    s.dissipation = y[2 * n];
    return s;
  };

  auto projected = [&](std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dir[i] * y[n + i];
    return s;
  };

  std::vector<Sample>& samples = traj.samples_;
  std::vector<Event>& events = traj.events_;
  samples.push_back(first);

  std::size_t step_count = 0;
  std::size_t stride = 1;
  auto record_step = [&](double t, std::span<const double> y) {
    ++step_count;
    if (step_count % stride != 0) return;
    samples.push_back(make_sample(t, y));
    if (samples.size() > spec.max_samples) {
      std::size_t keep = 1;
      for (std::size_t k = 2; k < samples.size(); k += 2) samples[keep++] = std::move(samples[k]);
      samples.resize(keep);
      stride *= 2;
    }
  };

  int prev_sign = sign_of(projected(y0));
  bool zero_pending = false;
  double zero_t = 0.0;
  std::vector<double> ybuf(dim);

  auto push_event = [&](double t, std::span<const double> y, int direction) {
    Event e;
    e.index = events.size();
    e.t = t;
    e.x.assign(y.begin(), y.begin() + n);
    e.v.assign(y.begin() + n, y.begin() + 2 * n);
    e.energy = energy(pot, e.x, e.v);
    e.direction = direction;
    events.push_back(std::move(e));
  };

  auto observer = [&](const StepView& step) {
    const double t1 = step.t0 + step.h;
    const int s1 = sign_of(projected(step.y1));
    if (s1 == 0) {
      if (prev_sign != 0 && !zero_pending) {
        zero_pending = true;
        zero_t = t1;
        std::copy(step.y1.begin(), step.y1.end(), ybuf.begin());
      }
    } else if (prev_sign == 0) {
      prev_sign = s1;
      zero_pending = false;
    } else if (s1 != prev_sign) {
      if (zero_pending) {
        push_event(zero_t, ybuf, s1);
      } else {
        auto s_at = [&](double theta) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += dir[i] * step.eval(theta, n + i);
          return s;
        };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && (hi - lo) * step.h > 5e-11; ++it) {
          const double mid = 0.5 * (lo + hi);
          const int sm = sign_of(s_at(mid));
          if (sm == 0) {
            lo = hi = mid;
            break;
          }
          (sm == prev_sign ? lo : hi) = mid;
        }
        const double theta = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < dim; ++i) ybuf[i] = step.eval(theta, i);
        push_event(step.t0 + theta * step.h, ybuf, s1);
      }
      prev_sign = s1;
      zero_pending = false;
    } else {
      zero_pending = false;
    }
    record_step(t1, step.y1);
  };

  if (t_start > 0.0) record_step(t_start, y0);

  OdeOptions opts;
  opts.rel_tol = spec.rel_tol;
  opts.abs_tol = spec.abs_tol;
  opts.max_steps = spec.max_steps;
  opts.fixed_step = spec.fixed_step;
  opts.keep_dense = spec.keep_dense;
  OdeResult res = solve_ode(rhs, t_start, y0, spec.t_end, opts, observer);

  if (samples.back().t != res.t_end) samples.push_back(make_sample(res.t_end, res.y_end));
  traj.stats_ = res.stats;
  traj.stride_ = stride;

  if (spec.keep_dense) {
    if (t_start > 0.0) {
      DenseOutput merged(dim);
      merged.reserve(res.dense.segments() + 1);
      merged.append(bootstrap_segment);
      merged.append(res.dense);
      merged.set_final(res.t_end, res.y_end);
      traj.dense_ = std::move(merged);
    } else {
      traj.dense_ = std::move(res.dense);
    }
  }
  return traj;
}

State Trajectory::at(double t) const {
  if (!spec_.keep_dense) throw DomainError("trajectory was integrated without dense output");
  const std::size_t n = dim();
  std::vector<double> y(2 * n + 1);
  dense_.eval(t, y);
  State s;
  s.t = t;
  s.x.assign(y.begin(), y.begin() + n);
  s.v.assign(y.begin() + n, y.begin() + 2 * n);
  return s;
}

double Trajectory::position(double t, std::size_t axis) const {
  if (!spec_.keep_dense) throw DomainError("trajectory was integrated without dense output");
  return dense_.eval_component(t, axis);
}

double Trajectory::energy_at(double t) const {
  const State s = at(t);
  return energy(spec_.potential, s.x, s.v);
}

double Trajectory::dissipation_at(double t) const {
  if (!spec_.keep_dense) throw DomainError("trajectory was integrated without dense output");
  return dense_.eval_component(t, 2 * dim());
}

State dense_eval(const Trajectory& traj, double t) {
  if (!(t >= traj.t_begin() && t <= traj.t_end()))
    throw DomainError("dense_eval: t = " + std::to_string(t) + " outside the trajectory span");
  const auto& samples = traj.samples();
  const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const Sample& s, double tt) { return s.t < tt; });
  if (it != samples.end() && it->t == t) return State{t, it->x, it->v};
  return traj.at(t);
}

}  // namespace vdamp
