#include "vdamp/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

// Dormand & Prince (1980) tableau with Shampine's dense-output weights, as in
// Hairer's DOPRI5.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Workspace {
  explicit Workspace(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), coef(5 * n) {}
  std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, y1, coef;
};

bool all_finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

OdeResult solve_ode(const OdeRhs& f, double t0, std::span<const double> y0_in, double t_end,
                    const OdeOptions& opts, const StepObserver& observer) {
  if (!(t_end > t0)) throw DomainError("solve_ode: t_end must exceed t0");
  if (!(opts.rel_tol > 0.0 && opts.abs_tol > 0.0))
    throw DomainError("solve_ode: tolerances must be positive");
  if (!all_finite(y0_in)) throw SolverError(SolverFailure::NonFiniteState, "initial state");

  const std::size_t n = y0_in.size();
  const double span = t_end - t0;
  const double h_min = 1e-14 * span;
  const bool fixed = opts.fixed_step > 0.0;

  OdeResult out;
  out.dense = DenseOutput(n);
  std::vector<double> y(y0_in.begin(), y0_in.end());
  Workspace w(n);
  SolverStats& st = out.stats;

  auto rhs = [&](double t, std::span<const double> yy, std::vector<double>& dy) {
    f(t, yy, dy);
    ++st.rhs_evals;
  };

  auto err_scale = [&](double a, double b) {
    return opts.abs_tol + opts.rel_tol * std::max(std::abs(a), std::abs(b));
  };

  double t = t0;
  rhs(t, y, w.k1);

  double h;
  if (fixed) {
    h = opts.fixed_step;
  } else if (opts.initial_step > 0.0) {
    h = opts.initial_step;
  } else {
    // Hairer's starting step heuristic.
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = err_scale(y[i], y[i]);
      dnf += (w.k1[i] / sk) * (w.k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, std::min(opts.max_step, span));
    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * w.k1[i];
    rhs(t + h, w.ytmp, w.k2);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = err_scale(y[i], y[i]);
      const double d = (w.k2[i] - w.k1[i]) / sk;
      der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / 5.0);
    h = std::min({100.0 * h, h1, opts.max_step, span});
    // Tiny abs_tol on components that start at zero drives the guess far
    // below the underflow floor; the controller grows it from here.
    h = std::max(h, std::min(100.0 * h_min, span));
  }

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  double facold = 1e-4;
  bool last_rejected = false;
  std::size_t steps = 0;

  while (t < t_end) {
    if (++steps > opts.max_steps)
      throw SolverError(SolverFailure::MaxStepsExceeded,
                        "exceeded " + std::to_string(opts.max_steps) + " steps at t = " +
                            std::to_string(t));
    bool final_step = false;
    if (t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }
    if (!fixed && h < h_min)
      throw SolverError(SolverFailure::StepUnderflow,
                        "step " + std::to_string(h) + " at t = " + std::to_string(t));

    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * a21 * w.k1[i];
    rhs(t + c2 * h, w.ytmp, w.k2);
    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * (a31 * w.k1[i] + a32 * w.k2[i]);
    rhs(t + c3 * h, w.ytmp, w.k3);
    for (std::size_t i = 0; i < n; ++i)
      w.ytmp[i] = y[i] + h * (a41 * w.k1[i] + a42 * w.k2[i] + a43 * w.k3[i]);
    rhs(t + c4 * h, w.ytmp, w.k4);
    for (std::size_t i = 0; i < n; ++i)
      w.ytmp[i] = y[i] + h * (a51 * w.k1[i] + a52 * w.k2[i] + a53 * w.k3[i] + a54 * w.k4[i]);
    rhs(t + c5 * h, w.ytmp, w.k5);
    for (std::size_t i = 0; i < n; ++i)
      w.ytmp[i] = y[i] + h * (a61 * w.k1[i] + a62 * w.k2[i] + a63 * w.k3[i] + a64 * w.k4[i] +
                              a65 * w.k5[i]);
    const double t_new = final_step ? t_end : t + h;
    rhs(t_new, w.ytmp, w.k6);
    for (std::size_t i = 0; i < n; ++i)
      w.y1[i] = y[i] + h * (a71 * w.k1[i] + a73 * w.k3[i] + a74 * w.k4[i] + a75 * w.k5[i] +
                            a76 * w.k6[i]);
    rhs(t_new, w.y1, w.k7);

    double err = 0.0;
    if (!fixed) {
      for (std::size_t i = 0; i < n; ++i) {
        const double e = h * (e1 * w.k1[i] + e3 * w.k3[i] + e4 * w.k4[i] + e5 * w.k5[i] +
                              e6 * w.k6[i] + e7 * w.k7[i]);
        const double sk = err_scale(y[i], w.y1[i]);
        err += (e / sk) * (e / sk);
      }
      err = std::sqrt(err / static_cast<double>(n));
      if (!std::isfinite(err)) err = 1e10;
    }

    if (fixed || err <= 1.0) {
      if (!all_finite(w.y1))
        throw SolverError(SolverFailure::NonFiniteState, "at t = " + std::to_string(t_new));
      ++st.accepted;
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = w.y1[i] - y[i];
        const double bspl = h * w.k1[i] - ydiff;
        w.coef[i] = y[i];
        w.coef[n + i] = ydiff;
        w.coef[2 * n + i] = bspl;
        w.coef[3 * n + i] = ydiff - h * w.k7[i] - bspl;
        w.coef[4 * n + i] = h * (d1 * w.k1[i] + d3 * w.k3[i] + d4 * w.k4[i] + d5 * w.k5[i] +
                                 d6 * w.k6[i] + d7 * w.k7[i]);
      }
      if (opts.keep_dense) out.dense.push(t, h, w.coef);
      if (observer) {
        StepView view{t, h, n, w.coef.data(), y, w.y1};
        observer(view);
      }
      y.swap(w.y1);
      w.k1.swap(w.k7);
      t = t_new;
      if (!fixed) {
        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        double h_new = std::min(h / fac, opts.max_step);
        if (last_rejected) h_new = std::min(h_new, h);
        facold = std::max(err, 1e-4);
        last_rejected = false;
        h = h_new;
      }
    } else {
      ++st.rejected;
      const double fac11 = std::pow(err, expo1);
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }

  out.dense.set_final(t, y);
  out.y_end = std::move(y);
  out.t_end = t;
  return out;
}

}  // namespace vdamp
