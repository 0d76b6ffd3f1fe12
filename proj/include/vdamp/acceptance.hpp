#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vdamp/potential.hpp"

namespace vdamp {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  /// Human-readable measurements, e.g. "max|x-J0| = 3.9e-09 (<= 1e-06)".
  std::string detail;
  /// Named measurements for the machine-readable report.
  std::vector<std::pair<std::string, double>> metrics;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Solver tolerance for the A1 run.
  double rel_tol = 1e-9;
};

struct CriterionInfo {
  std::string id;
  std::string title;
};

const std::vector<CriterionInfo>& acceptance_criteria();

/// Throws DomainError for an unknown id. Solver failures are reported as a
/// failed criterion with the failure in `detail`.
CriterionResult run_criterion(const std::string& id, const VerifyOptions& opts = {});

/// Seed of the random-start fixtures.
inline constexpr std::uint64_t kDoubleWellSweepSeed = 20261017;

/// Uniform start in x_range^dim x v_range^dim for row `row` of stream
/// `seed`: component i of x0 uses counter 2 dim row + i, of v0 counter
/// 2 dim row + dim + i.
std::pair<Vec, Vec> random_start(std::uint64_t seed, std::uint64_t row, std::size_t dim,
                                 Interval x_range, Interval v_range);

}  // namespace vdamp
