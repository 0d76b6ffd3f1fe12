#include "vdamp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Drops a '#' or ';' comment that starts the line or follows whitespace.
std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '#' || s[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1]))))
      return s.substr(0, i);
  }
  return s;
}

class SectionReader {
 public:
  SectionReader(const IniFile& ini, std::string name) : name_(std::move(name)) {
    sec_ = ini.section(name_);
  }

  bool present() const { return sec_ != nullptr; }

  const IniFile::Entry* find(const std::string& key) {
    used_.insert(key);
    if (!sec_) return nullptr;
    const auto it = sec_->find(key);
    return it == sec_->end() ? nullptr : &it->second;
  }

  void get(const std::string& key, double& out) {
    if (const auto* e = find(key)) out = to_double(*e, key);
  }
  void get(const std::string& key, std::optional<double>& out) {
    if (const auto* e = find(key)) out = to_double(*e, key);
  }
  void get(const std::string& key, std::string& out) {
    if (const auto* e = find(key)) {
      if (e->value.empty()) throw ConfigError(e->line, key, "empty value");
      out = e->value;
    }
  }
  void get(const std::string& key, bool& out) {
    if (const auto* e = find(key)) {
      if (e->value == "true" || e->value == "1" || e->value == "yes") out = true;
      else if (e->value == "false" || e->value == "0" || e->value == "no") out = false;
      else throw ConfigError(e->line, key, "expected true or false, got '" + e->value + "'");
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (const auto* e = find(key)) out = to_uint(*e, key);
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (const auto* e = find(key)) out = to_list(*e, key);
  }
  void get(const std::string& key, std::optional<Vec>& out) {
    if (const auto* e = find(key)) out = to_list(*e, key);
  }
  void get(const std::string& key, Interval& out) {
    if (const auto* e = find(key)) {
      const auto v = to_list(*e, key);
      if (v.size() != 2 || !(v[0] <= v[1]))
        throw ConfigError(e->line, key, "expected 'lo, hi' with lo <= hi");
      out = {v[0], v[1]};
    }
  }

  int line_of(const std::string& key) const {
    if (!sec_) return 0;
    const auto it = sec_->find(key);
    return it == sec_->end() ? 0 : it->second.line;
  }

  void reject_unknown() const {
    if (!sec_) return;
    for (const auto& [key, entry] : *sec_)
      if (!used_.count(key))
        throw ConfigError(entry.line, key, "unknown key in section [" + name_ + "]");
  }

 private:
  static double to_double(const IniFile::Entry& e, const std::string& key) {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw ConfigError(e.line, key, "expected a number, got '" + e.value + "'");
    return v;
  }
  static std::uint64_t to_uint(const IniFile::Entry& e, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size())
      throw ConfigError(e.line, key, "expected a non-negative integer, got '" + e.value + "'");
    return v;
  }
  static std::vector<double> to_list(const IniFile::Entry& e, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      IniFile::Entry one{trim(item), e.line};
      out.push_back(to_double(one, key));
    }
    if (out.empty() || e.value.back() == ',')
      throw ConfigError(e.line, key, "expected a comma-separated list of numbers");
    return out;
  }

  std::string name_;
  const IniFile::Section* sec_ = nullptr;
  std::set<std::string> used_;
};

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

void require(bool ok, int line, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(line, key, what);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

IniFile IniFile::parse(std::istream& in) {
  IniFile ini;
  std::string raw;
  std::string current;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "", "malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(line_no, "", "empty section name");
      if (ini.sections_.count(current))
        throw ConfigError(line_no, current, "duplicate section");
      ini.sections_[current];
      ini.section_lines_[current] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "", "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "", "missing key before '='");
    if (current.empty()) throw ConfigError(line_no, key, "key outside of any [section]");
    auto& sec = ini.sections_[current];
    if (sec.count(key)) throw ConfigError(line_no, key, "duplicate key");
    sec[key] = Entry{value, line_no};
  }
  return ini;
}

IniFile IniFile::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

const IniFile::Section* IniFile::section(const std::string& name) const {
  const auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

int IniFile::section_line(const std::string& name) const {
  const auto it = section_lines_.find(name);
  return it == section_lines_.end() ? 0 : it->second;
}

RunConfig parse_config(const IniFile& ini) {
  static const std::set<std::string> known = {"scenario", "schedule", "potential", "run",
                                              "analysis", "sgd",      "sweep"};
  for (const auto& [name, sec] : ini.sections())
    if (!known.count(name)) throw ConfigError(ini.section_line(name), name, "unknown section");

  RunConfig cfg;
  {
    SectionReader r(ini, "scenario");
    r.get("name", cfg.name);
    r.get("output_dir", cfg.output_dir);
    r.get("seed", cfg.seed);
    r.reject_unknown();
    for (char ch : cfg.name)
      require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.',
              r.line_of("name"), "name", "scenario name may only use [A-Za-z0-9_.-]");
  }
  {
    SectionReader r(ini, "schedule");
    ScheduleConfig& s = cfg.schedule;
    r.get("kind", s.kind);
    r.get("c", s.c);
    r.get("gamma", s.gamma);
    r.get("offset", s.offset);
    r.get("level", s.level);
    r.reject_unknown();
    require(s.kind == "constant" || s.kind == "powerlaw" || s.kind == "loglog",
            r.line_of("kind"), "kind",
            "unknown schedule kind '" + s.kind + "' (constant, powerlaw, loglog)");
    try {
      make_schedule(s);
    } catch (const DomainError& e) {
      const std::string key = s.kind == "constant" ? "level" : (s.c <= 0.0 ? "c" : "gamma");
      throw ConfigError(r.line_of(key) ? r.line_of(key) : r.line_of("kind"), key, e.what());
    }
  }
  {
    SectionReader r(ini, "potential");
    PotentialConfig& p = cfg.potential;
    r.get("kind", p.kind);
    r.get("dim", p.dim);
    r.get("p", p.p);
    r.get("beta", p.beta);
    r.get("coeffs", p.coeffs);
    r.get("negate", p.negate);
    r.reject_unknown();
    static const std::set<std::string> kinds = {"quadratic",   "ppower",      "signed_power",
                                                "double_well", "flat_bottom", "polynomial",
                                                "zero"};
    require(kinds.count(p.kind) > 0, r.line_of("kind"), "kind",
            "unknown potential kind '" + p.kind +
                "' (quadratic, ppower, signed_power, double_well, flat_bottom, polynomial, zero)");
    require(p.dim >= 1 && p.dim <= 16, r.line_of("dim"), "dim", "dim must lie in [1, 16]");
    require(p.kind != "polynomial" || !p.coeffs.empty(), r.line_of("kind"), "coeffs",
            "polynomial potential needs coeffs");
    try {
      make_potential(p);
    } catch (const DomainError& e) {
      const std::string key = p.kind == "ppower" ? "p"
                              : p.kind == "signed_power" ? "beta"
                              : p.kind == "polynomial"   ? "coeffs"
                                                         : "dim";
      throw ConfigError(r.line_of(key) ? r.line_of(key) : r.line_of("kind"), key, e.what());
    }
  }
  const std::size_t dim = make_potential(cfg.potential).dim();
  {
    SectionReader r(ini, "run");
    RunSection& run = cfg.run;
    r.get("t_end", run.t_end);
    r.get("rel_tol", run.rel_tol);
    r.get("abs_tol", run.abs_tol);
    if (!r.find("x0")) run.x0.assign(dim, run.x0.empty() ? 1.0 : run.x0[0]);
    r.get("x0", run.x0);
    if (!r.find("v0")) run.v0.assign(dim, 0.0);
    r.get("v0", run.v0);
    r.get("event_dir", run.event_dir);
    r.get("max_steps", run.max_steps);
    r.get("max_samples", run.max_samples);
    r.reject_unknown();
    require(run.t_end > 0.0, r.line_of("t_end"), "t_end", "t_end must be > 0");
    require(run.rel_tol > 0.0, r.line_of("rel_tol"), "rel_tol", "rel_tol must be > 0");
    require(run.abs_tol > 0.0, r.line_of("abs_tol"), "abs_tol", "abs_tol must be > 0");
    require(run.x0.size() == dim, r.line_of("x0"), "x0",
            "x0 has " + std::to_string(run.x0.size()) + " entries, potential dimension is " +
                std::to_string(dim));
    require(run.v0.size() == dim, r.line_of("v0"), "v0",
            "v0 has " + std::to_string(run.v0.size()) + " entries, potential dimension is " +
                std::to_string(dim));
    require(run.event_dir.empty() || run.event_dir.size() == dim, r.line_of("event_dir"),
            "event_dir", "event_dir length must match the dimension");
    require(run.max_samples >= 2, r.line_of("max_samples"), "max_samples", "must be >= 2");
    if (make_schedule(cfg.schedule).singular_at_zero()) {
      require(cfg.schedule.kind == "powerlaw" && cfg.schedule.gamma == 1.0,
              SectionReader(ini, "schedule").line_of("offset"), "offset",
              "offset 0 is only supported for gamma = 1");
      require(std::all_of(run.v0.begin(), run.v0.end(), [](double v) { return v == 0.0; }),
              r.line_of("v0"), "v0", "a schedule singular at t = 0 requires v0 = 0");
    }
  }
  {
    SectionReader r(ini, "analysis");
    AnalysisConfig& a = cfg.analysis;
    r.get("fit_from", a.fit_from);
    r.get("fit_to", a.fit_to);
    r.get("fit_model", a.fit_model);
    r.get("fit_series", a.fit_series);
    r.get("theta", a.theta);
    r.get("regime", a.regime);
    r.get("regime_k", a.regime_k);
    r.get("density_eps", a.density_eps);
    r.get("density_ref", a.density_ref);
    r.get("density_horizons", a.density_horizons);
    r.get("tail_fraction", a.tail_fraction);
    r.reject_unknown();
    require(a.fit_model == "powerlaw" || a.fit_model == "integral_a", r.line_of("fit_model"),
            "fit_model", "expected powerlaw or integral_a");
    require(a.fit_series == "phase" || a.fit_series == "gap", r.line_of("fit_series"),
            "fit_series", "expected phase or gap");
    require(a.regime == "none" || a.regime == "K1" || a.regime == "K2", r.line_of("regime"),
            "regime", "expected none, K1 or K2");
    require(a.theta >= 0.0, r.line_of("theta"), "theta", "theta must be >= 0");
    require(a.regime_k > 0.0, r.line_of("regime_k"), "regime_k", "regime_k must be > 0");
    require(a.density_eps > 0.0, r.line_of("density_eps"), "density_eps", "must be > 0");
    require(!a.density_ref || a.density_ref->size() == dim, r.line_of("density_ref"),
            "density_ref", "length must match the dimension");
    require(a.tail_fraction > 0.0 && a.tail_fraction <= 0.9, r.line_of("tail_fraction"),
            "tail_fraction", "must lie in (0, 0.9]");
    double prev = 0.0;
    for (double h : a.density_horizons) {
      require(h > prev && h <= cfg.run.t_end, r.line_of("density_horizons"), "density_horizons",
              "horizons must increase and stay within (0, t_end]");
      prev = h;
    }
    if (a.fit_from || a.fit_to) {
      const double lo = a.fit_from.value_or(cfg.run.t_end / 100.0);
      const double hi = a.fit_to.value_or(cfg.run.t_end);
      require(lo > 0.0 && lo < hi && hi <= cfg.run.t_end,
              r.line_of(a.fit_from ? "fit_from" : "fit_to"), a.fit_from ? "fit_from" : "fit_to",
              "fit window must satisfy 0 < fit_from < fit_to <= t_end");
    }
  }
  if (ini.has_section("sgd")) {
    SectionReader r(ini, "sgd");
    SgdConfig s;
    r.get("rule", s.rule);
    r.get("eps0", s.eps0);
    r.get("rho", s.rho);
    r.get("sigma", s.sigma);
    r.get("seed", s.seed);
    r.get("N", s.N);
    r.get("x0", s.x0);
    r.get("horizon", s.horizon);
    r.get("path_stride", s.path_stride);
    r.reject_unknown();
    require(s.rule == "constant" || s.rule == "power", r.line_of("rule"), "rule",
            "expected constant or power");
    require(s.eps0 > 0.0, r.line_of("eps0"), "eps0", "eps0 must be > 0");
    require(s.rule != "power" || (s.rho > 0.5 && s.rho <= 1.0), r.line_of("rho"), "rho",
            "rho must lie in (1/2, 1]");
    require(s.sigma >= 0.0, r.line_of("sigma"), "sigma", "sigma must be >= 0");
    require(s.N >= 1 && s.N <= 100'000'000, r.line_of("N"), "N", "N must lie in [1, 1e8]");
    require(!s.x0 || s.x0->size() == dim, r.line_of("x0"), "x0", "length must match the dimension");
    require(s.horizon > 0.0, r.line_of("horizon"), "horizon", "horizon must be > 0");
    cfg.sgd = s;
  }
  if (ini.has_section("sweep")) {
    SectionReader r(ini, "sweep");
    SweepConfig s;
    r.get("mode", s.mode);
    r.get("count", s.count);
    r.get("x0_range", s.x0_range);
    r.get("v0_range", s.v0_range);
    r.get("param", s.param);
    r.get("values", s.values);
    r.reject_unknown();
    require(s.mode == "random" || s.mode == "grid", r.line_of("mode"), "mode",
            "expected random or grid");
    if (s.mode == "random") {
      require(s.count >= 1 && s.count <= 10'000, r.line_of("count"), "count",
              "count must lie in [1, 10000]");
    } else {
      require(!s.values.empty() && s.values.size() <= 10'000, r.line_of("values"), "values",
              "grid needs 1 to 10000 values");
      RunConfig probe = cfg;
      try {
        set_parameter(probe, s.param, s.values.front());
      } catch (const ConfigError& e) {
        throw ConfigError(r.line_of("param"), "param", e.what());
      }
    }
    cfg.sweep = s;
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) { return parse_config(IniFile::parse_string(text)); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
  return parse_config(IniFile::parse(in));
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[scenario]\nname = " << c.name << "\noutput_dir = " << c.output_dir
    << "\nseed = " << c.seed << "\n\n";
  o << "[schedule]\nkind = " << c.schedule.kind << "\nc = " << format_double(c.schedule.c)
    << "\ngamma = " << format_double(c.schedule.gamma)
    << "\noffset = " << format_double(c.schedule.offset)
    << "\nlevel = " << format_double(c.schedule.level) << "\n\n";
  o << "[potential]\nkind = " << c.potential.kind << "\ndim = " << c.potential.dim
    << "\np = " << format_double(c.potential.p) << "\nbeta = " << format_double(c.potential.beta)
    << "\n";
  if (!c.potential.coeffs.empty()) o << "coeffs = " << join(c.potential.coeffs) << "\n";
  o << "negate = " << (c.potential.negate ? "true" : "false") << "\n\n";
  o << "[run]\nt_end = " << format_double(c.run.t_end)
    << "\nrel_tol = " << format_double(c.run.rel_tol)
    << "\nabs_tol = " << format_double(c.run.abs_tol) << "\nx0 = " << join(c.run.x0)
    << "\nv0 = " << join(c.run.v0) << "\n";
  if (!c.run.event_dir.empty()) o << "event_dir = " << join(c.run.event_dir) << "\n";
  o << "max_steps = " << c.run.max_steps << "\nmax_samples = " << c.run.max_samples << "\n\n";
  const AnalysisConfig& a = c.analysis;
  o << "[analysis]\n";
  if (a.fit_from) o << "fit_from = " << format_double(*a.fit_from) << "\n";
  if (a.fit_to) o << "fit_to = " << format_double(*a.fit_to) << "\n";
  o << "fit_model = " << a.fit_model << "\nfit_series = " << a.fit_series
    << "\ntheta = " << format_double(a.theta) << "\nregime = " << a.regime
    << "\nregime_k = " << format_double(a.regime_k)
    << "\ndensity_eps = " << format_double(a.density_eps) << "\n";
  if (a.density_ref) o << "density_ref = " << join(*a.density_ref) << "\n";
  if (!a.density_horizons.empty()) o << "density_horizons = " << join(a.density_horizons) << "\n";
  o << "tail_fraction = " << format_double(a.tail_fraction) << "\n";
  if (c.sgd) {
    const SgdConfig& s = *c.sgd;
    o << "\n[sgd]\nrule = " << s.rule << "\neps0 = " << format_double(s.eps0)
      << "\nrho = " << format_double(s.rho) << "\nsigma = " << format_double(s.sigma)
      << "\nseed = " << s.seed << "\nN = " << s.N << "\n";
    if (s.x0) o << "x0 = " << join(*s.x0) << "\n";
    o << "horizon = " << format_double(s.horizon) << "\npath_stride = " << s.path_stride << "\n";
  }
  if (c.sweep) {
    const SweepConfig& s = *c.sweep;
    o << "\n[sweep]\nmode = " << s.mode << "\ncount = " << s.count
      << "\nx0_range = " << format_double(s.x0_range.lo) << ", " << format_double(s.x0_range.hi)
      << "\nv0_range = " << format_double(s.v0_range.lo) << ", " << format_double(s.v0_range.hi)
      << "\n";
    if (!s.param.empty()) o << "param = " << s.param << "\n";
    if (!s.values.empty()) o << "values = " << join(s.values) << "\n";
  }
  return o.str();
}

DampingSchedule make_schedule(const ScheduleConfig& cfg) {
  if (cfg.kind == "constant") return DampingSchedule::constant(cfg.level);
  if (cfg.kind == "powerlaw") return DampingSchedule::power_law(cfg.c, cfg.gamma, cfg.offset);
  if (cfg.kind == "loglog") return loglog_schedule();
  throw ConfigError(0, "kind", "unknown schedule kind '" + cfg.kind + "'");
}

Potential make_potential(const PotentialConfig& cfg) {
  Potential p = Potential::zero(cfg.dim);
  if (cfg.kind == "quadratic") p = Potential::quadratic(cfg.dim);
  else if (cfg.kind == "ppower") p = Potential::p_power(cfg.p, cfg.dim);
  else if (cfg.kind == "signed_power") p = Potential::signed_power(cfg.beta);
  else if (cfg.kind == "double_well") p = Potential::double_well();
  else if (cfg.kind == "flat_bottom") p = Potential::flat_bottom(cfg.dim);
  else if (cfg.kind == "polynomial") p = Potential::polynomial(cfg.coeffs);
  else if (cfg.kind == "zero") p = Potential::zero(cfg.dim);
  else throw ConfigError(0, "kind", "unknown potential kind '" + cfg.kind + "'");
  return cfg.negate ? p.negated() : p;
}

SystemSpec make_spec(const RunConfig& cfg) {
  SystemSpec s;
  s.schedule = make_schedule(cfg.schedule);
  s.potential = make_potential(cfg.potential);
  s.x0 = cfg.run.x0;
  s.v0 = cfg.run.v0;
  s.t_end = cfg.run.t_end;
  s.rel_tol = cfg.run.rel_tol;
  s.abs_tol = cfg.run.abs_tol;
  s.max_steps = cfg.run.max_steps;
  s.max_samples = cfg.run.max_samples;
  s.event_dir = cfg.run.event_dir;
  return s;
}

StepSchedule make_steps(const SgdConfig& cfg) {
  return cfg.rule == "power" ? StepSchedule::power_decay(cfg.eps0, cfg.rho)
                             : StepSchedule::constant(cfg.eps0);
}

NoiseModel make_noise(const SgdConfig& cfg) {
  return cfg.sigma > 0.0 ? NoiseModel::gaussian(cfg.sigma, cfg.seed) : NoiseModel::none();
}

void set_parameter(RunConfig& cfg, const std::string& dotted, double value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError(0, dotted, "expected section.key");
  const std::string sec = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  auto fail = [&] { throw ConfigError(0, dotted, "not a numeric sweep parameter"); };
  if (sec == "schedule") {
    if (key == "c") cfg.schedule.c = value;
    else if (key == "gamma") cfg.schedule.gamma = value;
    else if (key == "offset") cfg.schedule.offset = value;
    else if (key == "level") cfg.schedule.level = value;
    else fail();
  } else if (sec == "potential") {
    if (key == "p") cfg.potential.p = value;
    else if (key == "beta") cfg.potential.beta = value;
    else fail();
  } else if (sec == "run") {
    if (key == "t_end") cfg.run.t_end = value;
    else if (key == "rel_tol") cfg.run.rel_tol = value;
    else if (key == "abs_tol") cfg.run.abs_tol = value;
    else if (key == "x0") std::fill(cfg.run.x0.begin(), cfg.run.x0.end(), value);
    else if (key == "v0") std::fill(cfg.run.v0.begin(), cfg.run.v0.end(), value);
    else fail();
  } else if (sec == "analysis") {
    if (key == "theta") cfg.analysis.theta = value;
    else if (key == "regime_k") cfg.analysis.regime_k = value;
    else if (key == "density_eps") cfg.analysis.density_eps = value;
    else fail();
  } else {
    fail();
  }
}

}  // namespace vdamp
