#include "vdamp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "vdamp/acceptance.hpp"
#include "vdamp/analyze.hpp"
#include "vdamp/error.hpp"

namespace vdamp {

namespace fs = std::filesystem;

namespace {

// JSON has no infinities; those are written as strings.
Json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

Json vec(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Json error_entry(const std::exception& e) { return Json{{"error", e.what()}}; }

// Runs one analysis; library errors become {"error": ...}, solver errors propagate.
template <class F>
Json guarded(F&& f) {
  try {
    return f();
  } catch (const SolverError&) {
    throw;
  } catch (const Error& e) {
    return error_entry(e);
  }
}

void append_row(std::string& out, std::initializer_list<double> head, std::span<const double> a,
                std::span<const double> b, std::initializer_list<double> tail) {
  bool first = true;
  auto put = [&](double x) {
    if (!first) out += ',';
    first = false;
    out += format_double(x);
  };
  for (double x : head) put(x);
  for (double x : a) put(x);
  for (double x : b) put(x);
  for (double x : tail) put(x);
  out += '\n';
}

Json rate_fit_json(const RunConfig& cfg, const Trajectory& traj, double min_g) {
  const AnalysisConfig& a = cfg.analysis;
  const double t0 = a.fit_from.value_or(cfg.run.t_end / 100.0);
  const double t1 = a.fit_to.value_or(cfg.run.t_end);
  const Series s =
      a.fit_series == "gap" ? energy_gap_series(traj, min_g) : phase_norm_series(traj);
  const RateModel model =
      a.fit_model == "integral_a" ? RateModel::ExponentialInIntegralOfA : RateModel::PowerLaw;
  const RateFit f = rate_fit(s, t0, t1, model, &traj.spec().schedule);
  return Json{{"series", a.fit_series},
              {"model", a.fit_model},
              {"t0", f.t0},
              {"t1", f.t1},
              {"exponent", num(f.exponent)},
              {"intercept", num(f.intercept)},
              {"residual_rms", num(f.residual_rms)},
              {"points", f.count}};
}

Json classification_json(const LimitClassification& cl) {
  Json j{{"verdict", to_string(cl.verdict)},
         {"limit", vec(cl.limit)},
         {"limit_exists", cl.limit_exists},
         {"extrapolated", cl.extrapolated},
         {"tail_width", num(cl.tail_width)},
         {"tail_speed", num(cl.tail_speed)},
         {"contraction", num(cl.contraction)},
         {"sign_changes", cl.sign_changes},
         {"sign_changes_final_fifth", cl.sign_changes_final_fifth}};
  if (cl.nearest) {
    j["nearest"] = Json{{"location", vec(cl.nearest->location)},
                        {"kind", to_string(cl.nearest->kind)},
                        {"value", num(cl.nearest->value)},
                        {"distance", num(cl.distance_to_nearest)}};
  } else {
    j["nearest"] = nullptr;
  }
  return j;
}

Json sgd_json(const RunConfig& cfg, const DiscretePath& path, const Potential& pot) {
  const SgdConfig& s = *cfg.sgd;
  Json j{{"rule", s.rule},
         {"eps0", s.eps0},
         {"steps", path.steps()},
         {"tau_end", num(path.tau(path.steps()))},
         {"x_end", vec(path.x(path.steps()))},
         {"drift_identity_residual", num(drift_identity_residual(path, pot))}};
  j["ode_comparison"] = guarded([&] {
    const OdeComparison c = compare_to_ode(path, pot, s.horizon);
    Json o{{"horizon", num(c.horizon)}, {"compared", c.compared}};
    // With noise the deviation is reported as RMS only.
    if (s.sigma == 0.0) o["sup_deviation"] = num(c.sup_deviation);
    o["rms_deviation"] = num(c.rms_deviation);
    return o;
  });
  return j;
}

DiscretePath run_sgd(const RunConfig& cfg, const Potential& pot) {
  const SgdConfig& s = *cfg.sgd;
  const Vec x0 = s.x0.value_or(cfg.run.x0);
  return run_recursion(pot, make_steps(s), make_noise(s), x0, s.N);
}

std::size_t path_stride(const SgdConfig& s) {
  if (s.path_stride > 0) return s.path_stride;
  return std::max<std::size_t>(1, (s.N + 99'999) / 100'000);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError(0, "output_dir", "cannot create output directory '" + dir.string() + "'");
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(0, "output_dir", "cannot write '" + tmp.string() + "'");
    out << content;
    out.close();
    if (!out) throw ConfigError(0, "output_dir", "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError(0, "output_dir", "cannot rename onto '" + path.string() + "'");
}

std::string series_csv(const Trajectory& traj) {
  const std::size_t n = traj.dim();
  std::string out = "t";
  for (std::size_t i = 0; i < n; ++i) out += ",x_" + std::to_string(i);
  for (std::size_t i = 0; i < n; ++i) out += ",v_" + std::to_string(i);
  out += ",E,a,gnorm\n";
  const Potential& pot = traj.spec().potential;
  const DampingSchedule& sched = traj.spec().schedule;
  Vec g(n);
  for (const Sample& s : traj.samples()) {
    pot.gradient(s.x, g);
    double gg = 0.0;
    for (double gi : g) gg += gi * gi;
    const double a =
        s.t == 0.0 && sched.singular_at_zero() ? std::numeric_limits<double>::infinity() : sched(s.t);
    append_row(out, {s.t}, s.x, s.v, {s.energy, a, std::sqrt(gg)});
  }
  return out;
}

std::string events_csv(const Trajectory& traj) {
  const std::size_t n = traj.dim();
  std::string out = "i,t_i";
  for (std::size_t i = 0; i < n; ++i) out += ",x_" + std::to_string(i);
  out += ",E\n";
  for (const Event& e : traj.events()) {
    out += std::to_string(e.index) + ',';
    append_row(out, {e.t}, e.x, {}, {e.energy});
  }
  return out;
}

std::string path_csv(const DiscretePath& path, std::size_t stride) {
  const std::size_t d = path.dim();
  std::string out = "n,tau";
  for (std::size_t i = 0; i < d; ++i) out += ",h_" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) out += ",X_" + std::to_string(i);
  out += '\n';
  const std::size_t last = path.steps();
  for (std::size_t k = 0; k <= last; ++k) {
    if (k % stride != 0 && k != last) continue;
    out += std::to_string(k) + ',';
    append_row(out, {path.tau(k)}, path.h(k), path.x(k), {});
  }
  return out;
}

Json analyze_run(const RunConfig& cfg, const Trajectory& traj) {
  const Potential& pot = traj.spec().potential;
  const DampingSchedule& sched = traj.spec().schedule;
  const MinReference ref = min_reference(traj);
  const auto& samples = traj.samples();

  Json j;
  j["scenario"] = cfg.name;
  j["config"] = echo_config(cfg);
  j["system"] = Json{{"schedule", sched.name()},
                     {"potential", pot.name()},
                     {"dim", traj.dim()},
                     {"t_end", traj.t_end()}};

  const ScheduleClassification sc = classify(sched);
  j["schedule_class"] = Json{{"integral_a_diverges", sc.integral_a_diverges},
                             {"exp_integral_finite", sc.exp_integral_finite},
                             {"bounded_below", sc.bounded_below},
                             {"slow_log_condition", sc.slow_log_condition},
                             {"analytic", sc.analytic}};

  const SolverStats& st = traj.stats();
  j["solver"] = Json{{"accepted", st.accepted},
                     {"rejected", st.rejected},
                     {"rhs_evals", st.rhs_evals},
                     {"samples", samples.size()},
                     {"stride", traj.stride()},
                     {"stationary", traj.stationary()}};

  double identity = 0.0;
  for (const Sample& s : samples)
    identity = std::max(identity, std::abs(s.energy + s.dissipation - samples.front().energy));
  j["energy"] = Json{{"initial", num(samples.front().energy)},
                     {"final", num(samples.back().energy)},
                     {"min_g", num(ref.value)},
                     {"min_g_exact", ref.exact},
                     {"final_gap", num(samples.back().energy - ref.value)},
                     {"dissipation", num(samples.back().dissipation)},
                     {"identity_residual", num(identity)}};
  j["energy"]["weighted_integral"] =
      guarded([&] { return num(weighted_energy_integral(traj, ref.value).value); });

  j["lower_bound"] = guarded([&] {
    const LowerBoundResidual lb = lower_bound_residual(traj, ref.value);
    return Json{{"min_slack", num(lb.min_slack)}, {"t_at_min", num(lb.t_at_min)}};
  });

  if (cfg.analysis.regime != "none") {
    j["upper_bound"] = guarded([&] {
      const BoundRegime regime = cfg.analysis.regime == "K1" ? BoundRegime::K1 : BoundRegime::K2;
      const UpperBoundResult u =
          upper_bound_check(traj, ref.value, cfg.analysis.theta, regime, cfg.analysis.regime_k);
      return Json{{"regime", cfg.analysis.regime},
                  {"pass", u.pass},
                  {"hypothesis_holds", u.hypothesis_holds},
                  {"rate", num(u.rate)},
                  {"constant", num(u.constant)},
                  {"last_decade_max", num(u.last_decade_max)},
                  {"early_max", num(u.early_max)}};
    });
  }

  j["rate_fit"] = guarded([&] { return rate_fit_json(cfg, traj, ref.value); });

  Json ev{{"count", traj.events().size()}};
  if (traj.events().size() >= 2) {
    const GapReport g = sign_change_gaps(traj);
    ev["first_t"] = num(traj.events().front().t);
    ev["last_t"] = num(traj.events().back().t);
    ev["last_gap"] = num(g.gaps.value.back());
    ev["gap_log_slope"] = num(g.log_slope);
    ev["max_gap_ratio"] = num(g.max_ratio);
  }
  j["events"] = ev;

  LimitClassification cl;
  bool have_cl = false;
  j["classification"] = guarded([&] {
    cl = classify_limit(traj, pot);
    have_cl = true;
    return classification_json(cl);
  });

  std::optional<Vec> density_ref = cfg.analysis.density_ref;
  if (!density_ref && have_cl) density_ref = cl.limit;
  if (density_ref) {
    j["density"] = guarded([&] {
      std::vector<double> horizons = cfg.analysis.density_horizons;
      if (horizons.empty()) horizons.push_back(traj.t_end());
      const DensityReport d = occupation_density(traj, *density_ref, cfg.analysis.density_eps, horizons);
      return Json{{"reference", vec(d.reference)},
                  {"eps", d.radius},
                  {"horizons", vec(d.horizons)},
                  {"fractions", vec(d.fractions)}};
    });
  }

  j["cesaro"] = guarded([&] {
    return Json{{"horizon", traj.t_end()}, {"mean", vec(cesaro_mean(traj, traj.t_end()))}};
  });

  j["omega_extent"] = guarded([&] {
    Json a = Json::array();
    for (const Interval& iv : omega_limit_extent(traj, cfg.analysis.tail_fraction))
      a.push_back(Json::array({num(iv.lo), num(iv.hi)}));
    return Json{{"tail_fraction", cfg.analysis.tail_fraction}, {"box", a}};
  });
  return j;
}

RunOutcome execute_run(const RunConfig& cfg, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ensure_dir(out_dir);
  const SystemSpec spec = make_spec(cfg);
  const Trajectory traj = integrate(spec);
  RunOutcome out;
  out.summary = analyze_run(cfg, traj);

  std::optional<DiscretePath> path;
  if (cfg.sgd) {
    path = run_sgd(cfg, spec.potential);
    out.summary["sgd"] = sgd_json(cfg, *path, spec.potential);
  }
  out.summary["wall_clock_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path base = out_dir / cfg.name;
  auto emit = [&](const std::string& suffix, const std::string& content) {
    fs::path p = base;
    p += suffix;
    write_atomic(p, content);
    out.files.push_back(p);
  };
  emit("_series.csv", series_csv(traj));
  emit("_events.csv", events_csv(traj));
  if (path) emit("_path.csv", path_csv(*path, path_stride(*cfg.sgd)));
  emit("_summary.json", out.summary.dump(2) + "\n");
  return out;
}

std::vector<SweepRow> sweep_rows(const RunConfig& cfg) {
  std::vector<SweepRow> rows;
  if (!cfg.sweep) {
    rows.push_back(SweepRow{0, cfg, 0.0, false, {}, {}});
    return rows;
  }
  const SweepConfig& sw = *cfg.sweep;
  const std::size_t dim = cfg.run.x0.size();
  if (sw.mode == "grid") {
    for (std::size_t k = 0; k < sw.values.size(); ++k) {
      RunConfig c = cfg;
      set_parameter(c, sw.param, sw.values[k]);
      c.sweep.reset();
      rows.push_back(SweepRow{k, std::move(c), sw.values[k], false, {}, {}});
    }
  } else {
    for (std::size_t k = 0; k < sw.count; ++k) {
      RunConfig c = cfg;
      auto [x0, v0] = random_start(cfg.seed, k, dim, sw.x0_range, sw.v0_range);
      c.run.x0 = x0;
      c.run.v0 = v0;
      c.sweep.reset();
      rows.push_back(SweepRow{k, std::move(c), 0.0, false, {}, {}});
    }
  }
  for (SweepRow& r : rows) r.config.name = cfg.name + "_row" + std::to_string(r.index);
  return rows;
}

SweepOutcome execute_sweep(const RunConfig& cfg, const fs::path& out_dir, std::size_t jobs) {
  const auto start = std::chrono::steady_clock::now();
  ensure_dir(out_dir);
  const fs::path row_dir = out_dir / (cfg.name + "_rows");
  ensure_dir(row_dir);

  SweepOutcome out;
  out.rows = sweep_rows(cfg);
  const std::size_t n = out.rows.size();
  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::exception_ptr fatal;

  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      SweepRow& row = out.rows[k];
      try {
        const RunConfig& rc = row.config;
        if (make_schedule(rc.schedule).singular_at_zero() &&
            std::any_of(rc.run.v0.begin(), rc.run.v0.end(), [](double v) { return v != 0.0; }))
          throw DomainError("a schedule singular at t = 0 requires v0 = 0");
        const Trajectory traj = integrate(make_spec(rc));
        row.summary = analyze_run(rc, traj);
        row.ok = true;
      } catch (const Error& e) {
        row.error = e.what();
      } catch (...) {
        std::lock_guard lock(io);
        if (!fatal) fatal = std::current_exception();
        continue;
      }
      Json doc{{"row", row.index}, {"ok", row.ok}};
      if (row.ok) doc["summary"] = row.summary;
      else doc["error"] = row.error;
      try {
        write_atomic(row_dir / ("row_" + std::to_string(row.index) + ".json"), doc.dump(2) + "\n");
      } catch (...) {
        std::lock_guard lock(io);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  // Table and aggregate.
  const Potential pot = make_potential(cfg.potential);
  const std::size_t dim = pot.dim();
  std::vector<CriticalPoint> crit;
  if (dim == 1) {
    double lo = cfg.run.x0[0], hi = cfg.run.x0[0];
    if (cfg.sweep && cfg.sweep->mode == "random") {
      lo = cfg.sweep->x0_range.lo;
      hi = cfg.sweep->x0_range.hi;
    }
    const Interval box[] = {{lo - 2.0, hi + 2.0}};
    try {
      crit = critical_points(pot, box);
    } catch (const UnsupportedError&) {
    }
  }
  const double match_tol = ClassifyOptions{}.match_tol;

  std::string csv = "row,param";
  for (std::size_t i = 0; i < dim; ++i) csv += ",x0_" + std::to_string(i);
  for (std::size_t i = 0; i < dim; ++i) csv += ",v0_" + std::to_string(i);
  csv += ",status,verdict";
  for (std::size_t i = 0; i < dim; ++i) csv += ",limit_" + std::to_string(i);
  csv += ",events,rate_exponent\n";

  std::map<std::string, std::size_t> verdicts;
  std::vector<std::size_t> reached(crit.size(), 0);
  std::size_t ok_rows = 0;
  Json failures = Json::array();
  for (const SweepRow& row : out.rows) {
    csv += std::to_string(row.index) + "," + format_double(row.parameter);
    for (double x : row.config.run.x0) csv += "," + format_double(x);
    for (double v : row.config.run.v0) csv += "," + format_double(v);
    if (!row.ok) {
      ++out.failed;
      failures.push_back(Json{{"row", row.index}, {"error", row.error}});
      csv += ",error,";
      for (std::size_t i = 0; i < dim; ++i) csv += ",";
      csv += ",,\n";
      continue;
    }
    ++ok_rows;
    const Json& cl = row.summary["classification"];
    std::string verdict = cl.contains("verdict") ? cl["verdict"].get<std::string>() : "Unavailable";
    ++verdicts[verdict];
    csv += ",ok," + verdict;
    Vec limit;
    if (cl.contains("limit"))
      for (const Json& x : cl["limit"]) limit.push_back(x.is_number() ? x.get<double>() : NAN);
    for (std::size_t i = 0; i < dim; ++i)
      csv += "," + (i < limit.size() ? format_double(limit[i]) : std::string());
    csv += "," + std::to_string(row.summary["events"]["count"].get<std::size_t>());
    const Json& fit = row.summary["rate_fit"];
    csv += "," + (fit.contains("exponent") && fit["exponent"].is_number()
                      ? format_double(fit["exponent"].get<double>())
                      : std::string());
    csv += "\n";

    const bool settles = verdict == "ConvergesToMin" || verdict == "ConvergesToMax" || verdict == "Converged";
    if (settles && limit.size() == 1)
      for (std::size_t c = 0; c < crit.size(); ++c)
        if (std::abs(limit[0] - crit[c].location[0]) <= match_tol) ++reached[c];
  }

  Json agg;
  agg["scenario"] = cfg.name;
  agg["config"] = echo_config(cfg);
  agg["rows"] = n;
  agg["ok_rows"] = ok_rows;
  agg["failed_rows"] = out.failed;
  Json vj = Json::object();
  for (const auto& [v, count] : verdicts)
    vj[v] = Json{{"count", count}, {"fraction", ok_rows ? double(count) / double(ok_rows) : 0.0}};
  agg["verdicts"] = vj;
  Json cj = Json::array();
  for (std::size_t c = 0; c < crit.size(); ++c)
    cj.push_back(Json{{"location", vec(crit[c].location)},
                      {"kind", to_string(crit[c].kind)},
                      {"count", reached[c]},
                      {"fraction", ok_rows ? double(reached[c]) / double(ok_rows) : 0.0}});
  agg["limits"] = cj;
  if (cfg.sweep && cfg.sweep->mode == "grid") {
    agg["param"] = cfg.sweep->param;
    Json exps = Json::array();
    for (const SweepRow& row : out.rows) {
      Json e{{"value", row.parameter}};
      if (row.ok && row.summary["rate_fit"].contains("exponent"))
        e["rate_exponent"] = row.summary["rate_fit"]["exponent"];
      else
        e["rate_exponent"] = nullptr;
      exps.push_back(e);
    }
    agg["rate_exponents"] = exps;
  }
  agg["failures"] = failures;
  agg["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.aggregate = agg;

  fs::path table = out_dir / (cfg.name + "_sweep.csv");
  fs::path summary = out_dir / (cfg.name + "_sweep.json");
  write_atomic(table, csv);
  write_atomic(summary, agg.dump(2) + "\n");
  out.files = {table, summary, row_dir};
  return out;
}

}  // namespace vdamp
