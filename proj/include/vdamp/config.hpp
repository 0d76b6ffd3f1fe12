#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdamp/integrate.hpp"
#include "vdamp/sgd.hpp"

namespace vdamp {

/// Raw `[section]` / `key = value` file. Comments start with '#' or ';'.
/// Keys and section names are case-sensitive.
class IniFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };
  using Section = std::map<std::string, Entry>;

  static IniFile parse(std::istream& in);
  static IniFile parse_string(const std::string& text);

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  const Section* section(const std::string& name) const;
  const std::map<std::string, Section>& sections() const noexcept { return sections_; }
  int section_line(const std::string& name) const;

 private:
  std::map<std::string, Section> sections_;
  std::map<std::string, int> section_lines_;
};

struct ScheduleConfig {
  std::string kind = "powerlaw";  // constant | powerlaw | loglog
  double c = 1.0;
  double gamma = 1.0;
  double offset = 1.0;
  double level = 0.0;
  bool operator==(const ScheduleConfig&) const = default;
};

struct PotentialConfig {
  // quadratic | ppower | signed_power | double_well | flat_bottom | polynomial | zero
  std::string kind = "quadratic";
  std::size_t dim = 1;
  double p = 2.0;
  double beta = 1.0;
  std::vector<double> coeffs;
  bool negate = false;
  bool operator==(const PotentialConfig&) const = default;
};

struct RunSection {
  double t_end = 100.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  Vec x0{1.0};
  Vec v0{0.0};
  Vec event_dir;
  std::size_t max_steps = 20'000'000;
  std::size_t max_samples = 100'000;
  bool operator==(const RunSection&) const = default;
};

struct AnalysisConfig {
  std::optional<double> fit_from;  // default t_end / 100
  std::optional<double> fit_to;    // default t_end
  std::string fit_model = "powerlaw";  // powerlaw | integral_a
  std::string fit_series = "phase";    // phase (|x|^2+|v|^2) | gap (E - min G)
  double theta = 0.5;
  std::string regime = "none";  // none | K1 | K2
  double regime_k = 1.0;
  double density_eps = 0.1;
  std::optional<Vec> density_ref;  // default: the classified limit
  std::vector<double> density_horizons;
  double tail_fraction = 0.1;
  bool operator==(const AnalysisConfig&) const = default;
};

struct SgdConfig {
  std::string rule = "constant";  // constant | power
  double eps0 = 1e-3;
  double rho = 0.7;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t N = 1000;
  std::optional<Vec> x0;  // default: run x0
  double horizon = 20.0;
  std::size_t path_stride = 0;  // 0: thin to <= 10^5 rows
  bool operator==(const SgdConfig&) const = default;
};

struct SweepConfig {
  std::string mode = "random";  // random | grid
  std::size_t count = 1;
  Interval x0_range{-2.0, 2.0};
  Interval v0_range{-2.0, 2.0};
  std::string param;  // grid: section.key, e.g. schedule.c
  std::vector<double> values;
  bool operator==(const SweepConfig& o) const {
    return mode == o.mode && count == o.count && x0_range.lo == o.x0_range.lo &&
           x0_range.hi == o.x0_range.hi && v0_range.lo == o.v0_range.lo &&
           v0_range.hi == o.v0_range.hi && param == o.param && values == o.values;
  }
};

struct RunConfig {
  std::string name = "scenario";
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  ScheduleConfig schedule;
  PotentialConfig potential;
  RunSection run;
  AnalysisConfig analysis;
  std::optional<SgdConfig> sgd;
  std::optional<SweepConfig> sweep;
  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the line and key of the first problem.
RunConfig parse_config(const IniFile& ini);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical INI text with every key explicit; parse_config_text(echo(c)) == c.
std::string echo_config(const RunConfig& cfg);

DampingSchedule make_schedule(const ScheduleConfig& cfg);
Potential make_potential(const PotentialConfig& cfg);
SystemSpec make_spec(const RunConfig& cfg);
StepSchedule make_steps(const SgdConfig& cfg);
NoiseModel make_noise(const SgdConfig& cfg);

/// Applies `section.key = value` (sweep grid parameter). Throws ConfigError.
void set_parameter(RunConfig& cfg, const std::string& dotted, double value);

/// Shortest decimal that round-trips ("inf", "-inf", "nan" for non-finite).
std::string format_double(double v);

}  // namespace vdamp
