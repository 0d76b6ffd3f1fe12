#include "vdamp/analyze.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

constexpr double kScanStep = 0.01;

// Sequential evaluator over increasing times; avoids a binary search per point.
class Scanner {
 public:
  explicit Scanner(const DenseOutput& d) : d_(d) {}

  double operator()(double t, std::size_t i) {
    if (t >= d_.t_end()) return d_.eval_component(d_.t_end(), i);
    const std::size_t last = d_.segments() - 1;
    if (t < d_.segment_start(k_)) k_ = d_.locate(t);
    while (k_ < last && d_.segment_start(k_ + 1) <= t) ++k_;
    const double theta = (t - d_.segment_start(k_)) / d_.segment_length(k_);
    return d_.eval_in_segment(k_, std::min(1.0, theta), i);
  }

 private:
  const DenseOutput& d_;
  std::size_t k_ = 0;
};

void require_dense(const Trajectory& traj) {
  if (!traj.spec().keep_dense || traj.dense().empty())
    throw DomainError("this diagnostic needs the continuous extension (keep_dense)");
}

void require_window(const Trajectory& traj, double t0, double t1) {
  if (!(t0 >= traj.t_begin() && t1 <= traj.t_end() && t0 <= t1))
    throw DomainError("window [" + std::to_string(t0) + ", " + std::to_string(t1) +
                      "] outside the trajectory span");
}

// Uniform grid over [t0, t1] with step <= kScanStep, both ends included.
template <class F>
void scan(double t0, double t1, F&& visit) {
  const auto cells = static_cast<std::size_t>(std::ceil((t1 - t0) / kScanStep));
  const std::size_t n = std::max<std::size_t>(cells, 1);
  const double step = (t1 - t0) / static_cast<double>(n);
  for (std::size_t j = 0; j <= n; ++j) visit(j == n ? t1 : t0 + step * static_cast<double>(j));
}

double raw_gap(const Sample& s, double min_g) { return s.energy - min_g; }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

// Three-point Gauss-Legendre on [t0, t1] inside one quartic segment (exact).
double segment_integral(const DenseOutput& d, std::size_t k, std::size_t comp, double t0,
                        double t1) {
  static constexpr std::array<double, 3> node = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr std::array<double, 3> weight = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double s0 = d.segment_start(k), h = d.segment_length(k);
  const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
  double acc = 0.0;
  for (int q = 0; q < 3; ++q) {
    const double t = mid + half * node[q];
    acc += weight[q] * d.eval_in_segment(k, (t - s0) / h, comp);
  }
  return acc * half;
}

double component_integral(const DenseOutput& d, std::size_t comp, double t0, double t1) {
  if (t1 <= t0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = d.locate(t0); k < d.segments(); ++k) {
    const double s0 = d.segment_start(k);
    if (s0 >= t1) break;
    const double lo = std::max(t0, s0);
    const double hi = std::min(t1, s0 + d.segment_length(k));
    if (hi > lo) acc += segment_integral(d, k, comp, lo, hi);
  }
  return acc;
}

}  // namespace

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ConvergesToMin: return "ConvergesToMin";
    case Verdict::ConvergesToMax: return "ConvergesToMax";
    case Verdict::Converged: return "Converged";
    case Verdict::NotConverged: return "NotConverged";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "Unknown";
}

MinReference min_reference(const Trajectory& traj) {
  if (const auto m = traj.spec().potential.min_value()) return {*m, true};
  double lowest = std::numeric_limits<double>::infinity();
  for (const Sample& s : traj.samples())
    lowest = std::min(lowest, traj.spec().potential.energy(s.x));
  return {lowest, false};
}

Series energy_gap_series(const Trajectory& traj, double min_g) {
  Series out;
  for (const Sample& s : traj.samples()) out.push(s.t, std::max(0.0, raw_gap(s, min_g)));
  return out;
}

Series phase_norm_series(const Trajectory& traj) {
  Series out;
  for (const Sample& s : traj.samples()) {
    double acc = 0.0;
    for (double xi : s.x) acc += xi * xi;
    for (double vi : s.v) acc += vi * vi;
    out.push(s.t, acc);
  }
  return out;
}

WeightedIntegral weighted_energy_integral(const Trajectory& traj, double min_g) {
  const DampingSchedule& a = traj.spec().schedule;
  const bool singular = a.singular_at_zero();
  const bool dense = traj.spec().keep_dense && !traj.dense().empty() && !traj.stationary();
  const std::size_t n = traj.dim();
  std::vector<double> y(2 * n + 1);
  auto integrand = [&](double t) {
    traj.dense().eval(t, y);
    double e = eval(traj.spec().potential, std::span<const double>(y.data(), n));
    for (std::size_t i = 0; i < n; ++i) e += 0.5 * y[n + i] * y[n + i];
    return a(t) * std::max(0.0, e - min_g);
  };
  // Seven-point Gauss rule on every piece of the continuous extension between
  // consecutive samples.
  auto piece = [&](double t0, double t1) {
    double sum = 0.0;
    std::size_t k = traj.dense().locate(t0);
    double lo = t0;
    while (lo < t1) {
      const double seg_end = k + 1 < traj.dense().segments() ? traj.dense().segment_start(k + 1) : t1;
      const double hi = std::min(t1, seg_end);
      if (hi > lo) sum += boost::math::quadrature::gauss<double, 7>::integrate(integrand, lo, hi);
      lo = hi;
      ++k;
    }
    return sum;
  };

  WeightedIntegral out;
  bool have_prev = false;
  double prev_t = 0.0, prev_f = 0.0;
  for (const Sample& s : traj.samples()) {
    if (singular && s.t == 0.0) continue;
    const double f = a(s.t) * std::max(0.0, raw_gap(s, min_g));
    if (have_prev) out.value += dense ? piece(prev_t, s.t) : 0.5 * (s.t - prev_t) * (f + prev_f);
    out.running.push(s.t, out.value);
    prev_t = s.t;
    prev_f = f;
    have_prev = true;
  }
  return out;
}

LowerBoundResidual lower_bound_residual(const Trajectory& traj, double min_g) {
  const auto& samples = traj.samples();
  const DampingSchedule& a = traj.spec().schedule;
  const double gap0 = raw_gap(samples.front(), min_g);
  LowerBoundResidual out{std::numeric_limits<double>::infinity(), 0.0};
  for (const Sample& s : samples) {
    const double k = decay_kernel(a, s.t);
    const double slack = raw_gap(s, min_g) - gap0 * k * k;
    if (slack < out.min_slack) out = {slack, s.t};
  }
  return out;
}

bool differential_inequality_holds(const DampingSchedule& sched, double k, int sign, double t0,
                                   double t1) {
  constexpr int kGrid = 400;
  const bool singular = sched.singular_at_zero();
  const double lo = std::max(t0, singular ? std::min(1e-3, t1 * 1e-3) : 0.0);
  auto ok_at = [&](double t) {
    const double a = sched(t);
    const double ad = sched.derivative(t);
    const double w = ad + k * a * a;
    const double tol = 1e-12 * (std::abs(ad) + k * a * a);
    return sign < 0 ? w <= tol : w >= -tol;
  };
  if (!ok_at(lo) || !ok_at(t1)) return false;
  const double base = lo > 0.0 ? lo : std::min(1e-3, t1 * 1e-3);
  const double ratio = std::pow(t1 / base, 1.0 / (kGrid - 1));
  double t = base;
  for (int j = 0; j < kGrid; ++j, t *= ratio)
    if (t >= lo && t <= t1 && !ok_at(t)) return false;
  return true;
}

UpperBoundResult upper_bound_check(const Trajectory& traj, double min_g, double theta,
                                   BoundRegime regime, double k, const UpperBoundOptions& opts) {
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  if (!(k > 0.0)) throw DomainError("regime constant K must be > 0");
  const DampingSchedule& a = traj.spec().schedule;
  const double t_end = traj.t_end();
  const double t_from = opts.t_from.value_or(std::max(1.0, t_end * 1e-4));
  if (!(t_from < t_end / 10.0))
    throw DomainError("upper_bound_check needs t_from below the last decade");

  UpperBoundResult out;
  const double k_cap = 1.0 / (theta + 0.5);
  if (regime == BoundRegime::K1) {
    out.hypothesis_holds = differential_inequality_holds(a, k, -1, 0.0, t_end);
    out.rate = std::min(k_cap, k);
  } else {
    out.hypothesis_holds =
        k <= k_cap * (1.0 + 1e-12) && differential_inequality_holds(a, k, +1, 0.0, t_end);
  }
  if (!out.hypothesis_holds && opts.enforce_hypothesis)
    throw DomainError(regime == BoundRegime::K1
                          ? "regime K1 hypothesis a' + K a^2 <= 0 fails on the grid"
                          : "regime K2 hypothesis a' + K a^2 >= 0, K <= 1/(theta+1/2) fails");

  // Integral of a from the reference time; schedules singular at 0 use t_from.
  const double ref = a.singular_at_zero() ? t_from : 0.0;
  const double split = t_end / 10.0;
  double prev_t = ref, running = 0.0;
  for (const Sample& s : traj.samples()) {
    if (s.t < t_from) continue;
    running += integral_a(a, prev_t, s.t);
    prev_t = s.t;
    const double gap = std::max(0.0, raw_gap(s, min_g));
    const double ratio =
        regime == BoundRegime::K1 ? gap * std::exp(out.rate * running) : gap / a(s.t);
    out.constant = std::max(out.constant, ratio);
    if (s.t >= split) out.last_decade_max = std::max(out.last_decade_max, ratio);
    else out.early_max = std::max(out.early_max, ratio);
  }
  out.pass = std::isfinite(out.constant) && out.last_decade_max <= 2.0 * out.early_max;
  return out;
}

RateFit rate_fit(const Series& series, double t0, double t1, RateModel model,
                 const DampingSchedule* sched) {
  if (!(t0 < t1)) throw DomainError("rate_fit: empty window");
  if (model == RateModel::ExponentialInIntegralOfA && sched == nullptr)
    throw DomainError("rate_fit: the integral-of-a model needs the schedule");
  std::vector<double> xs, ys;
  double prev_t = t0, running = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.t[i];
    if (t < t0 || t > t1) continue;
    const double v = series.value[i];
    if (!(v > 0.0))
      throw DomainError("rate_fit: nonpositive value " + std::to_string(v) + " at t = " +
                        std::to_string(t));
    if (model == RateModel::PowerLaw) {
      xs.push_back(std::log(t));
    } else {
      running += integral_a(*sched, prev_t, t);
      prev_t = t;
      xs.push_back(-running);
    }
    ys.push_back(std::log(v));
  }
  if (xs.size() < 30)
    throw DomainError("rate_fit: window holds " + std::to_string(xs.size()) +
                      " samples, need at least 30");
  const LineFit f = least_squares(xs, ys);
  return {t0, t1, model, f.slope, f.intercept, f.rms, xs.size()};
}

Vec cesaro_mean(const Trajectory& traj, double horizon) {
  require_dense(traj);
  if (!(horizon > 0.0 && horizon <= traj.t_end()))
    throw DomainError("cesaro_mean: horizon outside (0, t_end]");
  Vec out(traj.dim());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = component_integral(traj.dense(), i, 0.0, horizon) / horizon;
  return out;
}

DensityReport occupation_density(const Trajectory& traj, std::span<const double> reference,
                                 double eps, std::span<const double> horizons) {
  require_dense(traj);
  const std::size_t n = traj.dim();
  if (reference.size() != n) throw DomainError("occupation_density: reference dimension");
  if (!(eps > 0.0)) throw DomainError("occupation_density: eps must be > 0");
  DensityReport rep;
  rep.reference.assign(reference.begin(), reference.end());
  rep.radius = eps;
  rep.grid_step = kScanStep;
  double prev = 0.0;
  for (double T : horizons) {
    if (!(T > prev && T <= traj.t_end()))
      throw DomainError("occupation_density: horizons must increase within the span");
    prev = T;
    const auto cells = static_cast<std::size_t>(std::ceil(T / kScanStep));
    const double dt = T / static_cast<double>(cells);
    Scanner sc(traj.dense());
    std::size_t outside = 0;
    for (std::size_t j = 0; j < cells; ++j) {
      const double t = (static_cast<double>(j) + 0.5) * dt;
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sc(t, i) - reference[i];
        d2 += d * d;
      }
      if (d2 > eps * eps) ++outside;
    }
    rep.horizons.push_back(T);
    rep.fractions.push_back(static_cast<double>(outside) / static_cast<double>(cells));
  }
  return rep;
}

double occupation_fraction(const std::function<double(double)>& w, double eps, double horizon,
                           double step) {
  if (!(horizon > 0.0) || !(step > 0.0)) throw DomainError("occupation_fraction: bad grid");
  const auto cells = static_cast<std::size_t>(std::ceil(horizon / step));
  const double dt = horizon / static_cast<double>(cells);
  std::size_t outside = 0;
  for (std::size_t j = 0; j < cells; ++j)
    if (w((static_cast<double>(j) + 0.5) * dt) > eps) ++outside;
  return static_cast<double>(outside) / static_cast<double>(cells);
}

std::vector<Interval> extent(const Trajectory& traj, double t0, double t1) {
  require_dense(traj);
  require_window(traj, t0, t1);
  const std::size_t n = traj.dim();
  std::vector<Interval> box(n, Interval{std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity()});
  Scanner sc(traj.dense());
  scan(t0, t1, [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = sc(t, i);
      box[i].lo = std::min(box[i].lo, x);
      box[i].hi = std::max(box[i].hi, x);
    }
  });
  // Events on a coordinate axis are that coordinate's turning points.
  const Vec& dir = traj.event_direction();
  for (std::size_t i = 0; i < n; ++i) {
    bool axis = dir[i] != 0.0;
    for (std::size_t j = 0; j < n && axis; ++j)
      if (j != i && dir[j] != 0.0) axis = false;
    if (!axis) continue;
    for (const Event& e : traj.events()) {
      if (e.t < t0 || e.t > t1) continue;
      box[i].lo = std::min(box[i].lo, e.x[i]);
      box[i].hi = std::max(box[i].hi, e.x[i]);
    }
  }
  return box;
}

std::vector<Interval> omega_limit_extent(const Trajectory& traj, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.9))
    throw DomainError("omega_limit_extent: tail_fraction must lie in (0, 0.9]");
  const double t1 = traj.t_end();
  return extent(traj, t1 * (1.0 - tail_fraction), t1);
}

double tail_diameter(const Trajectory& traj, double t0, double t1) {
  require_dense(traj);
  require_window(traj, t0, t1);
  const std::size_t n = traj.dim();
  if (n != 2) {
    double best = 0.0;
    for (const Interval& iv : extent(traj, t0, t1)) best = std::max(best, iv.hi - iv.lo);
    return best;
  }
  constexpr int kDirs = 180;
  std::array<double, kDirs> lo, hi, cs, sn;
  for (int k = 0; k < kDirs; ++k) {
    const double ang = std::numbers::pi * k / kDirs;
    cs[k] = std::cos(ang);
    sn[k] = std::sin(ang);
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -lo[k];
  }
  Scanner sc(traj.dense());
  scan(t0, t1, [&](double t) {
    const double x = sc(t, 0), y = sc(t, 1);
    for (int k = 0; k < kDirs; ++k) {
      const double p = cs[k] * x + sn[k] * y;
      lo[k] = std::min(lo[k], p);
      hi[k] = std::max(hi[k], p);
    }
  });
  double best = 0.0;
  for (int k = 0; k < kDirs; ++k) best = std::max(best, hi[k] - lo[k]);
  return best;
}

double max_speed(const Trajectory& traj, double t0, double t1) {
  require_dense(traj);
  require_window(traj, t0, t1);
  const std::size_t n = traj.dim();
  Scanner sc(traj.dense());
  double best = 0.0;
  scan(t0, t1, [&](double t) {
    double v2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = sc(t, n + i);
      v2 += v * v;
    }
    best = std::max(best, v2);
  });
  return std::sqrt(best);
}

GapReport sign_change_gaps(const Trajectory& traj) {
  const auto& ev = traj.events();
  if (ev.size() < 2) throw DomainError("sign_change_gaps: fewer than 2 events");
  GapReport rep;
  std::vector<double> xs;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    const double gap = ev[i + 1].t - ev[i].t;
    rep.gaps.push(ev[i].t, gap);
    const double lg = std::log1p(ev[i].t);
    xs.push_back(lg);
    rep.max_ratio = std::max(rep.max_ratio, gap / (1.0 + lg));
  }
  rep.log_slope = xs.size() >= 2 ? least_squares(xs, rep.gaps.value).slope : 0.0;
  return rep;
}

double max_gap_ratio(const Trajectory& traj, double t0, double t1) {
  const auto& ev = traj.events();
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    if (ev[i].t < t0 || ev[i].t > t1) continue;
    best = std::max(best, (ev[i + 1].t - ev[i].t) / (1.0 + std::log1p(ev[i].t)));
  }
  return best;
}

std::size_t event_count(const Trajectory& traj, double t0, double t1) {
  const auto& ev = traj.events();
  const auto lo = std::lower_bound(ev.begin(), ev.end(), t0,
                                   [](const Event& e, double t) { return e.t < t; });
  const auto hi = std::upper_bound(ev.begin(), ev.end(), t1,
                                   [](double t, const Event& e) { return t < e.t; });
  return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

LimitClassification classify_limit(const Trajectory& traj, const Potential& pot,
                                   const ClassifyOptions& opts) {
  require_dense(traj);
  const std::size_t n = traj.dim();
  const double T = traj.t_end();
  LimitClassification out;
  out.horizon = T;

  auto width_of = [](const std::vector<Interval>& box) {
    double w = 0.0;
    for (const Interval& iv : box) w = std::max(w, iv.hi - iv.lo);
    return w;
  };

  const auto tail = extent(traj, 0.9 * T, T);
  out.tail_width = width_of(tail);
  out.tail_speed = max_speed(traj, 0.9 * T, T);
  out.limit.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.limit[i] = 0.5 * (tail[i].lo + tail[i].hi);

  const double late = width_of(extent(traj, 0.5 * T, T));
  const double early = width_of(extent(traj, 0.05 * T, 0.1 * T));
  out.contraction = early > 0.0 ? late / early
                                : (late > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

  out.sign_changes = traj.events().size();
  out.sign_changes_final_fifth = event_count(traj, 0.8 * T, T);
  const std::size_t early_changes = event_count(traj, 0.0, 0.1 * T);
  const bool growing = out.sign_changes > early_changes && out.sign_changes_final_fifth > 0;

  // Critical points inside the region the run visited, padded by 1.
  std::vector<Interval> box(n, Interval{std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity()});
  for (const Sample& s : traj.samples())
    for (std::size_t i = 0; i < n; ++i) {
      box[i].lo = std::min(box[i].lo, s.x[i]);
      box[i].hi = std::max(box[i].hi, s.x[i]);
    }
  for (Interval& iv : box) {
    iv.lo -= 1.0;
    iv.hi += 1.0;
  }
  try {
    double best = std::numeric_limits<double>::infinity();
    for (const CriticalPoint& cp : critical_points(pot, box)) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = cp.location[i] - out.limit[i];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        out.nearest = cp;
      }
    }
    out.distance_to_nearest = std::sqrt(best);
  } catch (const UnsupportedError&) {
    out.nearest.reset();
  }
  const bool matched = out.nearest && out.distance_to_nearest <= opts.match_tol;
  const CriticalKind kind = matched ? out.nearest->kind : CriticalKind::Degenerate;

  const bool strict = out.tail_width < opts.tail_width_tol && out.tail_speed < opts.tail_speed_tol;
  if (strict) {
    out.limit_exists = true;
    if (kind == CriticalKind::LocalMax && out.sign_changes_final_fifth == 0)
      out.verdict = Verdict::ConvergesToMax;
    else if (kind == CriticalKind::LocalMin && growing)
      out.verdict = Verdict::ConvergesToMin;
    else
      out.verdict = Verdict::Converged;
    return out;
  }
  const bool contracting = out.contraction <= 0.5;
  if (contracting && matched && kind == CriticalKind::LocalMin && growing) {
    out.extrapolated = true;
    out.verdict = Verdict::ConvergesToMin;
  } else if (!contracting && out.tail_width >= opts.match_tol) {
    out.verdict = Verdict::NotConverged;
  } else {
    out.verdict = Verdict::Undetermined;
  }
  return out;
}

}  // namespace vdamp
