#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vdamp/config.hpp"
#include "vdamp/integrate.hpp"
#include "vdamp/sgd.hpp"

namespace vdamp {

using Json = nlohmann::ordered_json;

/// Everything in the run summary except the wall clock. Analyses that cannot
/// be evaluated on this run record {"error": ...} in place of a value.
Json analyze_run(const RunConfig& cfg, const Trajectory& traj);

/// t,x_0..,v_0..,E,a,gnorm at every stored sample.
std::string series_csv(const Trajectory& traj);
/// i,t_i,x_0..,E at every velocity sign change.
std::string events_csv(const Trajectory& traj);
/// n,tau,h_0..,X_0.. for every `stride`-th step and the last one.
std::string path_csv(const DiscretePath& path, std::size_t stride);

/// Writes to a temporary sibling, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct RunOutcome {
  Json summary;
  std::vector<std::filesystem::path> files;
};

/// Integrates, analyzes and writes <name>_series.csv, <name>_events.csv,
/// <name>_summary.json (and <name>_path.csv with an [sgd] section) into
/// `out_dir`. Throws ConfigError, SolverError.
RunOutcome execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct SweepRow {
  std::size_t index = 0;
  RunConfig config;
  double parameter = 0.0;
  bool ok = false;
  std::string error;
  Json summary;
};

/// Row configurations in their fixed order.
std::vector<SweepRow> sweep_rows(const RunConfig& cfg);

struct SweepOutcome {
  std::vector<SweepRow> rows;
  Json aggregate;
  std::vector<std::filesystem::path> files;
  std::size_t failed = 0;
};

/// Runs every row on up to `jobs` threads. Each finished row writes
/// <name>_rows/row_<k>.json; the table <name>_sweep.csv and the aggregate
/// <name>_sweep.json are written at the end. Per-row solver failures are
/// recorded and the sweep continues.
SweepOutcome execute_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir,
                           std::size_t jobs);

}  // namespace vdamp
