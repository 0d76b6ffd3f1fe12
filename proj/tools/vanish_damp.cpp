// vanish-damp: scenario runner for x'' + a(t) x' + grad G(x) = 0.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "vdamp/acceptance.hpp"
#include "vdamp/config.hpp"
#include "vdamp/error.hpp"
#include "vdamp/oracle.hpp"
#include "vdamp/runner.hpp"

namespace fs = std::filesystem;
using namespace vdamp;

namespace {

enum Exit { kOk = 0, kCriterionFailed = 1, kConfigError = 2, kSolverError = 3 };

std::size_t resolve_jobs(std::optional<std::size_t> flag) {
  if (flag) return std::max<std::size_t>(1, *flag);
  if (const char* env = std::getenv("VANISH_DAMP_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(0, "VANISH_DAMP_JOBS", std::string("expected a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path output_dir(const RunConfig& cfg, const std::string& override_dir) {
  return override_dir.empty() ? fs::path(cfg.output_dir) : fs::path(override_dir);
}

std::string json_text(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) return "-";
  const Json& v = j[key];
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

int cmd_run(const std::string& path, const std::string& out_dir) {
  const RunConfig cfg = load_config(path);
  const RunOutcome r = execute_run(cfg, output_dir(cfg, out_dir));
  const Json& s = r.summary;
  std::cout << "scenario   " << cfg.name << "\n"
            << "verdict    " << json_text(s["classification"], "verdict") << "\n"
            << "limit      " << json_text(s["classification"], "limit") << "\n"
            << "rate fit   " << json_text(s["rate_fit"], "exponent") << " (" << cfg.analysis.fit_model
            << ", " << cfg.analysis.fit_series << ")\n"
            << "events     " << s["events"]["count"].dump() << "\n"
            << "steps      " << s["solver"]["accepted"].dump() << " accepted, "
            << s["solver"]["rejected"].dump() << " rejected\n";
  if (s.contains("sgd"))
    std::cout << "sgd        " << s["sgd"]["ode_comparison"].dump() << "\n";
  for (const fs::path& f : r.files) std::cout << "wrote      " << f.string() << "\n";
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& out_dir, std::optional<std::size_t> jobs) {
  const RunConfig cfg = load_config(path);
  const std::size_t n = resolve_jobs(jobs);
  const SweepOutcome r = execute_sweep(cfg, output_dir(cfg, out_dir), n);
  const Json& a = r.aggregate;
  std::cout << "scenario   " << cfg.name << " (" << a["rows"].dump() << " rows, " << n
            << " jobs, " << r.failed << " failed)\n";
  for (const auto& [verdict, v] : a["verdicts"].items())
    std::cout << "verdict    " << verdict << ": " << v["count"].dump() << " ("
              << v["fraction"].dump() << ")\n";
  for (const Json& c : a["limits"])
    std::cout << "limit      " << c["location"].dump() << " " << c["kind"].get<std::string>()
              << ": " << c["fraction"].dump() << "\n";
  if (a.contains("rate_exponents"))
    for (const Json& e : a["rate_exponents"])
      std::cout << a["param"].get<std::string>() << " = " << e["value"].dump()
                << "  rate exponent " << e["rate_exponent"].dump() << "\n";
  for (const fs::path& f : r.files) std::cout << "wrote      " << f.string() << "\n";
  return kOk;
}

int cmd_verify(bool list, const std::string& only, std::optional<double> rel_tol,
               const std::string& json_path) {
  std::vector<std::string> ids;
  if (only.empty()) {
    for (const CriterionInfo& c : acceptance_criteria()) ids.push_back(c.id);
  } else {
    std::stringstream ss(only);
    for (std::string id; std::getline(ss, id, ',');) ids.push_back(id);
  }
  if (list) {
    for (const CriterionInfo& c : acceptance_criteria()) std::cout << c.id << "  " << c.title << "\n";
    return kOk;
  }
  VerifyOptions opts;
  if (rel_tol) opts.rel_tol = *rel_tol;
  Json report = Json::array();
  int failed = 0;
  for (const std::string& id : ids) {
    const CriterionResult r = run_criterion(id, opts);
    if (!r.pass) ++failed;
    std::printf("%-4s %s  %s  [%.1f s]\n", r.id.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str(),
                r.seconds);
    std::fflush(stdout);
    Json m = Json::object();
    for (const auto& [k, v] : r.metrics) m[k] = std::isfinite(v) ? Json(v) : Json(format_double(v));
    report.push_back(Json{{"id", r.id},
                          {"title", r.title},
                          {"pass", r.pass},
                          {"detail", r.detail},
                          {"metrics", m},
                          {"seconds", r.seconds}});
  }
  std::printf("%zu/%zu criteria passed\n", ids.size() - failed, ids.size());
  if (!json_path.empty()) write_atomic(json_path, report.dump(2) + "\n");
  return failed ? kCriterionFailed : kOk;
}

struct OracleArgs {
  std::string kind;
  double nu = 0.0, c = 1.0, beta = 1.0, gamma = 1.0, offset = 1.0;
  std::optional<double> level;
  double x0 = 1.0, v0 = 0.0;
  std::optional<double> t0;
  double t1 = 50.0;
  std::size_t n = 101;
};

int cmd_oracle(const OracleArgs& o) {
  const double t0 = o.t0.value_or(o.kind == "decay" ? 10.0 : (o.kind == "gamma" ? 0.5 : 0.0));
  if (o.n < 2 || !(o.t1 > t0)) throw DomainError("oracle grid needs n >= 2 and t1 > t0");
  const DampingSchedule sched = o.level ? DampingSchedule::constant(*o.level)
                                        : DampingSchedule::power_law(o.c, o.gamma, o.offset);
  std::string out;
  auto row = [&](std::initializer_list<double> cols) {
    bool first = true;
    for (double x : cols) {
      if (!first) out += ',';
      first = false;
      out += format_double(x);
    }
    out += '\n';
  };
  if (o.kind == "bessel") out = "t,J_" + format_double(o.nu) + "\n";
  else if (o.kind == "linear") out = "t,x\n";
  else if (o.kind == "decay") out = "t,y\n";
  else if (o.kind == "powerlaw") out = "t,x,v,c\n";
  else if (o.kind == "zero") out = "t,x,v\n";
  else if (o.kind == "envelope") out = "t,envelope,hypotheses_hold\n";
  else if (o.kind == "gamma") out = "x,gamma\n";
  else throw ConfigError(0, "kind", "unknown oracle kind '" + o.kind + "'");
  for (std::size_t k = 0; k < o.n; ++k) {
    const double t = k + 1 == o.n ? o.t1 : t0 + (o.t1 - t0) * double(k) / double(o.n - 1);
    if (o.kind == "bessel") row({t, bessel_j(o.nu, t)});
    else if (o.kind == "linear") row({t, linear_regular_solution(o.c, t)});
    else if (o.kind == "decay") row({t, modified_decay_asymptote(o.c, t)});
    else if (o.kind == "powerlaw") {
      const PowerLawSolution p = power_law_exact(o.beta, t);
      row({t, p.x, p.v, p.damping});
    } else if (o.kind == "zero") {
      const double x0[] = {o.x0}, v0[] = {o.v0};
      const OracleState s = zero_potential_solution(sched, x0, v0, t);
      row({t, s.x[0], s.v[0]});
    } else if (o.kind == "envelope") {
      const Envelope e = linear_envelope(sched, t);
      row({t, e.value, e.hypotheses_hold ? 1.0 : 0.0});
    } else {
      row({t, lanczos_gamma(t)});
    }
  }
  std::cout << out;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vanish-damp: damped second-order gradient dynamics with vanishing damping"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir;
  auto* run = app.add_subcommand("run", "integrate and analyze one scenario");
  run->add_option("config", cfg_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory (overrides [scenario] output_dir)");

  std::optional<std::size_t> jobs;
  auto* sweep = app.add_subcommand("sweep", "run every row of a [sweep] grid or random set");
  sweep->add_option("config", cfg_path, "scenario file")->required();
  sweep->add_option("--out", out_dir, "output directory (overrides [scenario] output_dir)");
  sweep->add_option("--jobs,-j", jobs, "parallel rows (default: VANISH_DAMP_JOBS or core count)");

  bool list = false;
  std::string only, json_path;
  std::optional<double> rel_tol;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_flag("--list", list, "print criterion ids without running");
  verify->add_option("--only", only, "comma-separated criterion ids");
  verify->add_option("--rel-tol", rel_tol, "solver rel_tol for the Bessel run");
  verify->add_option("--json", json_path, "write the machine-readable report here");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "print a closed-form reference as CSV");
  oracle->add_option("kind", oa.kind, "bessel | linear | decay | powerlaw | zero | envelope | gamma")
      ->required();
  oracle->add_option("--nu", oa.nu, "Bessel order");
  oracle->add_option("--c", oa.c, "damping amplitude");
  oracle->add_option("--gamma", oa.gamma, "damping exponent");
  oracle->add_option("--offset", oa.offset, "damping offset");
  oracle->add_option("--level", oa.level, "constant damping level (replaces c/gamma/offset)");
  oracle->add_option("--beta", oa.beta, "power-law solution exponent");
  oracle->add_option("--x0", oa.x0, "initial position (zero)");
  oracle->add_option("--v0", oa.v0, "initial velocity (zero)");
  oracle->add_option("--t0", oa.t0, "grid start");
  oracle->add_option("--t1", oa.t1, "grid end");
  oracle->add_option("--n", oa.n, "grid points");

  auto* echo = app.add_subcommand("echo", "print the canonical form of a scenario file");
  echo->add_option("config", cfg_path, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) return cmd_run(cfg_path, out_dir);
    if (*sweep) return cmd_sweep(cfg_path, out_dir, jobs);
    if (*verify) return cmd_verify(list, only, rel_tol, json_path);
    if (*oracle) return cmd_oracle(oa);
    if (*echo) {
      std::cout << echo_config(load_config(cfg_path));
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << (cfg_path.empty() ? "" : cfg_path + ": ") << e.what() << "\n";
    return kConfigError;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
