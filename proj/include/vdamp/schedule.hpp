#pragma once

#include <functional>
#include <memory>
#include <string>

namespace vdamp {

enum class ScheduleKind { Constant, PowerLaw, Custom };

const char* to_string(ScheduleKind kind) noexcept;

/// Damping coefficient a(t) >= 0 of the system x'' + a(t) x' + grad G(x) = 0.
///
/// Constant:  a(t) = level.
/// PowerLaw:  a(t) = c / (t + offset)^gamma. offset = 0 is the singular start
///            and is only accepted for gamma <= 1.
/// Custom:    user callbacks. When no derivative callback is given, a'(t) is a
///            central difference with step max(1e-6, 1e-6 t) and
///            derivative_is_numeric() reports it.
///
/// Values are immutable and cheap to copy; custom callbacks must be pure.
class DampingSchedule {
 public:
  using Fn = std::function<double(double)>;

  static DampingSchedule constant(double level);
  static DampingSchedule power_law(double c, double gamma, double offset = 1.0);
  static DampingSchedule custom(Fn a, Fn a_dot, bool nonincreasing, std::string name = "custom",
                                bool singular_at_zero = false);

  ScheduleKind kind() const noexcept { return kind_; }
  double level() const noexcept { return level_; }
  double amplitude() const noexcept { return c_; }
  double exponent() const noexcept { return gamma_; }
  double offset() const noexcept { return offset_; }
  const std::string& name() const noexcept { return name_; }

  bool singular_at_zero() const noexcept;
  bool declared_nonincreasing() const noexcept;
  bool derivative_is_numeric() const noexcept;

  /// a(t). Throws DomainError for t < 0 or t = 0 on a singular schedule.
  double operator()(double t) const;
  /// a'(t), same domain as operator().
  double derivative(double t) const;

 private:
  DampingSchedule() = default;

  struct CustomFns {
    Fn a;
    Fn a_dot;
    bool nonincreasing = true;
    bool singular = false;
  };

  ScheduleKind kind_ = ScheduleKind::Constant;
  double level_ = 0.0;
  double c_ = 0.0;
  double gamma_ = 0.0;
  double offset_ = 1.0;
  std::string name_;
  std::shared_ptr<const CustomFns> custom_;
};

double a_at(const DampingSchedule& sched, double t);

/// Integral of a over [t0, t1]. Closed form for Constant and PowerLaw,
/// adaptive Gauss-Kronrod (relative 1e-10) for Custom. Returns +inf when the
/// schedule is not integrable at t0 = 0 (PowerLaw, offset 0, gamma >= 1).
double integral_a(const DampingSchedule& sched, double t0, double t1);

/// exp(-integral_a(0, t)); 1 at t = 0, 0 for t > 0 on a non-integrable start.
double decay_kernel(const DampingSchedule& sched, double t);

struct ScheduleClassification {
  bool integral_a_diverges = false;   // int_0^inf a = inf
  bool exp_integral_finite = false;   // int_0^inf exp(-int_0^t a) dt < inf
  bool bounded_below = false;         // a(t) >= a0 > 0
  bool slow_log_condition = false;    // int_1^inf a(t ln t) dt = inf
  bool analytic = true;               // false: horizon heuristic (Custom)
};

ScheduleClassification classify(const DampingSchedule& sched);

/// t -> 1 / ((t+1) ln ln(t+3)): decays faster than any c/(t+1) yet still
/// satisfies the logarithmic condition int_1^inf a(t ln t) dt = inf.
DampingSchedule loglog_schedule();

}  // namespace vdamp
