#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "vdamp/dense_output.hpp"

namespace vdamp {

struct SolverStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  std::size_t max_steps = 20'000'000;
  /// > 0 disables error control and steps with this size (last step clipped).
  double fixed_step = 0.0;
  /// 0 lets the solver choose.
  double initial_step = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  bool keep_dense = true;
};

/// View of one accepted step's continuous extension.
struct StepView {
  double t0 = 0.0;
  double h = 0.0;
  std::size_t dim = 0;
  const double* coeffs = nullptr;  // 5 rows of `dim`
  std::span<const double> y0;
  std::span<const double> y1;

  double eval(double theta, std::size_t i) const noexcept {
    const double th1 = 1.0 - theta;
    return coeffs[i] +
           theta * (coeffs[dim + i] +
                    th1 * (coeffs[2 * dim + i] +
                           theta * (coeffs[3 * dim + i] + th1 * coeffs[4 * dim + i])));
  }
};

using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;
using StepObserver = std::function<void(const StepView&)>;

struct OdeResult {
  DenseOutput dense;
  std::vector<double> y_end;
  double t_end = 0.0;
  SolverStats stats;
};

/// Dormand-Prince 5(4) with the Hairer-Wanner step controller and quartic
/// dense output, integrating y' = f(t, y) from (t0, y0) to t_end.
/// `observer`, when set, is called after every accepted step.
/// Throws SolverError on step-count exhaustion, step underflow
/// (h < 1e-14 |t_end - t0|) or a non-finite state.
OdeResult solve_ode(const OdeRhs& f, double t0, std::span<const double> y0, double t_end,
                    const OdeOptions& opts, const StepObserver& observer = {});

}  // namespace vdamp
