#include "vdamp/schedule.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Heuristic classification knobs for Custom schedules.
constexpr double kHorizon = 1e6;
constexpr double kDivergenceThreshold = 1e3;

double gk_integral(const DampingSchedule::Fn& f, double t0, double t1) {
  if (t1 <= t0) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, t0, t1, 30, 1e-10, &err, &l1);
  return value;
}

// Per-decade increments of int_lo^T f over T = 10^k, k = 1..6, starting at lo.
std::vector<double> decade_increments(const DampingSchedule::Fn& f, double lo) {
  std::vector<double> inc;
  double prev = lo;
  for (double T = 10.0; T <= kHorizon * 1.0001; T *= 10.0) {
    // Split each decade so the kernel does not hide behind a single panel.
    double sum = 0.0;
    const double ratio = std::pow(T / prev, 1.0 / 8.0);
    double a = prev;
    for (int i = 0; i < 8; ++i) {
      const double b = (i == 7) ? T : a * ratio;
      sum += gk_integral(f, a, b);
      a = b;
    }
    inc.push_back(sum);
    prev = T;
  }
  return inc;
}

bool increments_diverge(const std::vector<double>& inc) {
  double total = 0.0;
  for (double v : inc) total += v;
  if (!std::isfinite(total) || total > kDivergenceThreshold) return true;
  const double last = inc.back();
  const double before = inc[inc.size() - 2];
  return last >= 0.5 * before && last > 0.0;
}

}  // namespace

const char* to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::PowerLaw: return "powerlaw";
    case ScheduleKind::Custom: return "custom";
  }
  return "unknown";
}

DampingSchedule DampingSchedule::constant(double level) {
  if (!(level >= 0.0) || !std::isfinite(level))
    throw DomainError("constant schedule needs a finite level >= 0");
  DampingSchedule s;
  s.kind_ = ScheduleKind::Constant;
  s.level_ = level;
  s.name_ = "constant";
  return s;
}

DampingSchedule DampingSchedule::power_law(double c, double gamma, double offset) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("power-law amplitude must be > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("power-law exponent must be >= 0");
  if (!(offset >= 0.0) || !std::isfinite(offset)) throw DomainError("power-law offset must be >= 0");
  if (offset == 0.0 && gamma > 1.0)
    throw DomainError("offset 0 is only supported for exponent <= 1");
  DampingSchedule s;
  s.kind_ = ScheduleKind::PowerLaw;
  s.c_ = c;
  s.gamma_ = gamma;
  s.offset_ = offset;
  s.name_ = "powerlaw";
  return s;
}

DampingSchedule DampingSchedule::custom(Fn a, Fn a_dot, bool nonincreasing, std::string name,
                                        bool singular_at_zero) {
  if (!a) throw DomainError("custom schedule needs an a(t) callback");
  DampingSchedule s;
  s.kind_ = ScheduleKind::Custom;
  s.name_ = std::move(name);
  s.custom_ = std::make_shared<const CustomFns>(
      CustomFns{std::move(a), std::move(a_dot), nonincreasing, singular_at_zero});

  // Spot check on a log grid over [1e-6, 1e6] (plus t = 0 when regular).
  const auto& fa = s.custom_->a;
  double prev = singular_at_zero ? std::numeric_limits<double>::infinity() : fa(0.0);
  if (!(prev >= 0.0)) throw DomainError("custom schedule: a(0) is negative or not a number");
  for (double t = 1e-6; t <= 1e6; t *= 1.2) {
    const double v = fa(t);
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("custom schedule: a(" + std::to_string(t) + ") is negative or not finite");
    if (nonincreasing && v > prev * (1.0 + 1e-12))
      throw DomainError("custom schedule declared nonincreasing but increases near t = " +
                        std::to_string(t));
    prev = v;
  }
  return s;
}

bool DampingSchedule::singular_at_zero() const noexcept {
  switch (kind_) {
    case ScheduleKind::Constant: return false;
    case ScheduleKind::PowerLaw: return offset_ == 0.0 && gamma_ > 0.0;
    case ScheduleKind::Custom: return custom_->singular;
  }
  return false;
}

bool DampingSchedule::declared_nonincreasing() const noexcept {
  return kind_ != ScheduleKind::Custom || custom_->nonincreasing;
}

bool DampingSchedule::derivative_is_numeric() const noexcept {
  return kind_ == ScheduleKind::Custom && !custom_->a_dot;
}

double DampingSchedule::operator()(double t) const {
  if (!(t >= 0.0)) throw DomainError("damping evaluated at negative time");
  if (t == 0.0 && singular_at_zero()) throw DomainError("damping is singular at t = 0");
  switch (kind_) {
    case ScheduleKind::Constant: return level_;
    case ScheduleKind::PowerLaw:
      if (gamma_ == 1.0) return c_ / (t + offset_);
      return c_ / std::pow(t + offset_, gamma_);
    case ScheduleKind::Custom: return custom_->a(t);
  }
  return 0.0;
}

double DampingSchedule::derivative(double t) const {
  if (!(t >= 0.0)) throw DomainError("damping derivative at negative time");
  if (t == 0.0 && singular_at_zero()) throw DomainError("damping is singular at t = 0");
  switch (kind_) {
    case ScheduleKind::Constant: return 0.0;
    case ScheduleKind::PowerLaw:
      return -c_ * gamma_ / std::pow(t + offset_, gamma_ + 1.0);
    case ScheduleKind::Custom: {
      if (custom_->a_dot) return custom_->a_dot(t);
      double h = std::max(1e-6, 1e-6 * t);
      if (t - h <= 0.0) {
        if (singular_at_zero()) h = 0.5 * t;
        else return (custom_->a(t + h) - custom_->a(t)) / h;
      }
      return (custom_->a(t + h) - custom_->a(t - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

double a_at(const DampingSchedule& sched, double t) { return sched(t); }

double integral_a(const DampingSchedule& sched, double t0, double t1) {
  if (!(t0 >= 0.0)) throw DomainError("integral_a: t0 must be >= 0");
  if (!(t1 >= t0)) throw DomainError("integral_a: reversed interval");
  if (t1 == t0) return 0.0;
  switch (sched.kind()) {
    case ScheduleKind::Constant: return sched.level() * (t1 - t0);
    case ScheduleKind::PowerLaw: {
      const double c = sched.amplitude();
      const double g = sched.exponent();
      const double s = sched.offset();
      if (s == 0.0 && t0 == 0.0 && g >= 1.0) return kInf;
      if (g == 1.0) return c * std::log1p((t1 - t0) / (t0 + s));
      if (g == 0.0) return c * (t1 - t0);
      const double e = 1.0 - g;
      return c * (std::pow(t1 + s, e) - std::pow(t0 + s, e)) / e;
    }
    case ScheduleKind::Custom: {
      const auto f = [&sched](double t) { return sched(t); };
      if (t0 == 0.0 && sched.singular_at_zero()) {
        // Integrable endpoint singularity: geometric panels from 1e-12 upward.
        double sum = 0.0;
        double lo = std::min(t1, 1.0) * 1e-12;
        for (double hi = lo * 10.0; lo < t1; hi *= 10.0) {
          const double b = std::min(hi, t1);
          sum += gk_integral(f, lo, b);
          lo = b;
        }
        return sum;
      }
      return gk_integral(f, t0, t1);
    }
  }
  return 0.0;
}

double decay_kernel(const DampingSchedule& sched, double t) {
  if (t == 0.0) return 1.0;
  return std::exp(-integral_a(sched, 0.0, t));
}

ScheduleClassification classify(const DampingSchedule& sched) {
  ScheduleClassification out;
  switch (sched.kind()) {
    case ScheduleKind::Constant: {
      const bool pos = sched.level() > 0.0;
      out.integral_a_diverges = pos;
      out.exp_integral_finite = pos;
      out.bounded_below = pos;
      out.slow_log_condition = pos;
      return out;
    }
    case ScheduleKind::PowerLaw: {
      // Tail classification; the offset only shifts the origin.
      const double g = sched.exponent();
      const double c = sched.amplitude();
      out.integral_a_diverges = g <= 1.0;
      out.exp_integral_finite = g < 1.0 || (g == 1.0 && c > 1.0);
      out.bounded_below = g == 0.0;
      out.slow_log_condition = g <= 1.0;
      return out;
    }
    case ScheduleKind::Custom: break;
  }

  out.analytic = false;
  const auto a = [&sched](double t) { return sched(t); };
  const double lo = sched.singular_at_zero() ? 1e-9 : 0.0;

  const auto inc_a = decade_increments(a, 1.0);
  out.integral_a_diverges = increments_diverge(inc_a);

  // Kernel on a log grid, accumulated segment by segment so we never
  // re-integrate a from the origin.
  if (out.integral_a_diverges) {
    const int per_decade = 400;
    double t_prev = 1.0;
    double log_kernel = -integral_a(sched, lo, 1.0);
    double k_prev = std::exp(log_kernel);
    std::vector<double> decade_sum;
    double acc = 0.0;
    const double ratio = std::pow(10.0, 1.0 / per_decade);
    int n = 0;
    for (double t = t_prev * ratio; t <= kHorizon * 1.0001; t *= ratio) {
      log_kernel -= integral_a(sched, t_prev, t);
      const double k = std::exp(log_kernel);
      acc += 0.5 * (k + k_prev) * (t - t_prev);
      k_prev = k;
      t_prev = t;
      if (++n % per_decade == 0) {
        decade_sum.push_back(acc);
        acc = 0.0;
      }
    }
    const double last = decade_sum.back();
    const double before = decade_sum[decade_sum.size() - 2];
    out.exp_integral_finite = last < 0.5 * before || last == 0.0;
  }

  const double a_far = sched(kHorizon);
  out.bounded_below = a_far > 0.0 && a_far >= 0.5 * sched(1e3);

  const auto a_tlog = [&sched](double t) { return sched(t * std::log(t)); };
  std::vector<double> inc_log;
  double prev = 1.0 + 1e-9;
  for (double T = 10.0; T <= kHorizon * 1.0001; T *= 10.0) {
    inc_log.push_back(gk_integral(a_tlog, prev, T));
    prev = T;
  }
  out.slow_log_condition = increments_diverge(inc_log);
  return out;
}

DampingSchedule loglog_schedule() {
  const auto a = [](double t) { return 1.0 / ((t + 1.0) * std::log(std::log(t + 3.0))); };
  const auto a_dot = [](double t) {
    const double l = std::log(t + 3.0);
    const double ll = std::log(l);
    const double d_den = ll + (t + 1.0) / ((t + 3.0) * l);
    const double den = (t + 1.0) * ll;
    return -d_den / (den * den);
  };
  return DampingSchedule::custom(a, a_dot, true, "loglog");
}

}  // namespace vdamp
