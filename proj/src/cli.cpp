#include "mhd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mhd/diagnostics.hpp"
#include "mhd/errors.hpp"
#include "mhd/linear_propagator.hpp"
#include "mhd/nonlinear_solver.hpp"
#include "mhd/normal_modes.hpp"

namespace mhd::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* command_name(Command c) {
  switch (c) {
    case Command::linear_decay: return "linear-decay";
    case Command::nonlinear_run: return "nonlinear-run";
    case Command::audit_lemma: return "audit-lemma";
    case Command::audit_energy: return "audit-energy";
    case Command::audit_embedding: return "audit-embedding";
    case Command::fit: return "fit";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::linear_decay, Command::nonlinear_run, Command::audit_lemma,
                    Command::audit_energy, Command::audit_embedding, Command::fit})
    if (name == command_name(c)) return c;
  throw ConfigError("unknown command '" + name + "'");
}

namespace {

// Keys under a command prefix, e.g. decay.t_max. Prefixes of other commands
// are skipped so one config file can serve several commands.
const std::map<std::string, std::set<std::string>> kCommandKeys = {
    {"decay", {"t_min", "t_max", "samples", "fit_lo", "fit_hi", "bound_t", "j_max", "rel_tol"}},
    {"lemma", {"xi_min", "xi_max", "xi_step", "samples", "times"}},
    {"embedding", {"n", "l", "widths"}},
    {"fit", {"input", "t_lo", "t_hi", "expected", "component"}},
    {"sweep", {"deltas"}},
};

const char* prefix_of(Command c) {
  switch (c) {
    case Command::linear_decay: return "decay";
    case Command::audit_lemma: return "lemma";
    case Command::audit_embedding: return "embedding";
    case Command::fit: return "fit";
    case Command::nonlinear_run: return "sweep";
    default: return "";
  }
}

struct Setup {
  SolverConfig solver;
  std::map<std::string, std::string> opts;  // own prefix stripped
  fs::path dir;
};

Setup load(const ExperimentSpec& spec) {
  Setup s;
  std::vector<std::pair<std::string, std::string>> kv;
  if (!spec.config_path.empty()) {
    std::ifstream in(spec.config_path);
    if (!in) throw ConfigError("cannot open config " + spec.config_path.string());
    kv = read_key_values(in);
  }
  const std::string own = prefix_of(spec.command);
  for (const auto& [key, value] : kv) {
    const auto dot = key.find('.');
    const std::string head = dot == std::string::npos ? "" : key.substr(0, dot);
    if (auto it = kCommandKeys.find(head); it != kCommandKeys.end()) {
      if (head != own) continue;
      const std::string sub = key.substr(dot + 1);
      if (!it->second.count(sub)) throw ConfigError("config: unknown key '" + key + "'");
      s.opts[sub] = value;
      continue;
    }
    apply_config_value(s.solver, key, value);
  }
  for (const auto& [k, v] : spec.tolerances) s.solver.tolerances[k] = v;
  if (spec.seed) s.solver.seed = *spec.seed;
  if (!spec.output_dir.empty()) s.dir = spec.output_dir;
  else if (!s.solver.output_dir.empty()) s.dir = s.solver.output_dir;
  else s.dir = "out";
  s.solver.output_dir = s.dir.string();
  fs::create_directories(s.dir);
  return s;
}

double opt_double(const Setup& s, const std::string& key, double fallback) {
  const auto it = s.opts.find(key);
  if (it == s.opts.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double x = std::stod(it->second, &pos);
    if (pos == it->second.size() && !std::isnan(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + key + " expects a number, got '" + it->second + "'");
}

int opt_int(const Setup& s, const std::string& key, int fallback) {
  const double x = opt_double(s, key, fallback);
  if (x != std::round(x) || std::abs(x) > 1e9)
    throw ConfigError("config: " + key + " expects an integer");
  return static_cast<int>(x);
}

std::vector<double> opt_list(const Setup& s, const std::string& key, std::vector<double> fallback) {
  const auto it = s.opts.find(key);
  if (it == s.opts.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Setup one;
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config: empty entry in " + key);
    one.opts[key] = item.substr(b, e - b + 1);
    out.push_back(opt_double(one, key, 0.0));
  }
  if (out.empty()) throw ConfigError("config: " + key + " is empty");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json fit_json(const DecayFit& f) {
  return {{"slope", f.slope},         {"intercept", f.intercept}, {"rms_residual", f.rms_residual},
          {"t_lo", f.t_lo},           {"t_hi", f.t_hi},           {"samples", f.samples}};
}

}  // namespace

// -- linear-decay -----------------------------------------------------------

int cmd_linear_decay(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const Setup s = load(spec);
  const double t_min = opt_double(s, "t_min", 1.0);
  const double t_max = opt_double(s, "t_max", 1e4);
  const int samples = opt_int(s, "samples", 81);
  const double fit_lo = opt_double(s, "fit_lo", 100.0);
  const double fit_hi = opt_double(s, "fit_hi", t_max);
  const double bound_t = opt_double(s, "bound_t", 10.0);
  const int j_max = opt_int(s, "j_max", 2);
  QuadratureOptions qopt;
  qopt.rel_tol = opt_double(s, "rel_tol", qopt.rel_tol);

  if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max))
    throw ConfigError("decay window needs 0 < t_min < t_max");
  if (samples < 10) throw ConfigError("decay.samples must be >= 10");
  if (!(fit_lo >= t_min && fit_hi <= t_max && fit_lo < fit_hi))
    throw ConfigError("fit window must lie inside [t_min, t_max]");
  if (!(bound_t >= t_min && bound_t < t_max)) throw ConfigError("decay.bound_t outside the window");
  if (j_max < 0) throw ConfigError("decay.j_max must be >= 0");

  const double slope_tol = s.solver.tolerance("slope", 0.05);
  const double trend_tol = s.solver.tolerance("upper_trend", 1.05);
  const double lower_frac = s.solver.tolerance("lower_fraction", 0.5);

  std::vector<double> times = log_spaced_times(t_min, t_max, samples);
  if (std::find(times.begin(), times.end(), bound_t) == times.end()) {
    times.push_back(bound_t);
    std::sort(times.begin(), times.end());
  }

  json fits = json::array();
  json bounds = json::array();
  json failures = json::array();

  const ProfileData prop = build_profile(ProfileKind::prop25);
  const std::array<std::pair<Component, double>, 4> expected = {{
      {Component::v1, -0.75}, {Component::v2, -1.25}, {Component::B1, -0.25}, {Component::B2, -0.75}}};
  for (const auto& [c, slope] : expected) {
    const DecayCurve curve = linear_decay_curve(prop, ComponentWeight{c}, times, qopt);
    {
      std::ofstream f(s.dir / ("decay_prop25_" + curve.label + ".csv"), std::ios::binary);
      write_decay_csv(f, curve);
    }
    const DecayFit fit = fit_decay(curve, fit_lo, fit_hi);
    const bool ok = std::abs(fit.slope - slope) <= slope_tol;
    json j = {{"profile", "prop25"}, {"weight", curve.label}, {"expected", slope}};
    j.update(fit_json(fit));
    j["pass"] = ok;
    fits.push_back(j);
    if (!ok)
      failures.push_back({{"check", "slope"}, {"profile", "prop25"}, {"weight", curve.label},
                          {"slope", fit.slope}, {"expected", slope}, {"tolerance", slope_tol}});
    if (!spec.quiet) out << "prop25 " << curve.label << " slope " << format_double(fit.slope) << "\n";
  }

  const ProfileData fstar = build_profile(ProfileKind::fstar);
  for (int j = 0; j <= j_max; ++j) {
    const DecayCurve curve = linear_decay_curve(fstar, XiPowerWeight{j}, times, qopt);
    {
      std::ofstream f(s.dir / ("decay_fstar_j" + std::to_string(j) + ".csv"), std::ios::binary);
      write_decay_csv(f, curve);
    }
    const double rate = 0.5 * j + 0.25;
    const DecayFit fit = fit_decay(curve, fit_lo, fit_hi);
    const bool slope_ok = std::abs(fit.slope + rate) <= slope_tol;

    // normalized (1+t)^{j/2+1/4} |xi1^j e^{-lambda_- t} f^|
    double global = 0.0, last = 0.0, at_bound = 0.0, lower_min = INFINITY;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
      const double t = curve.times[i];
      const double n = std::pow(1.0 + t, rate) * curve.values[i];
      if (t >= 1.0) global = std::max(global, n);
      if (t >= t_max / 10.0) last = std::max(last, n);
      if (t == bound_t) at_bound = n;
    }
    for (std::size_t i = 0; i < curve.times.size(); ++i)
      if (curve.times[i] >= bound_t)
        lower_min = std::min(lower_min, std::pow(1.0 + curve.times[i], rate) * curve.values[i]);
    const double upper_ratio = global > 0.0 ? last / global : INFINITY;
    const double lower_ratio = at_bound > 0.0 ? lower_min / at_bound : 0.0;
    const bool upper_ok = upper_ratio <= trend_tol;
    const bool lower_ok = lower_ratio >= lower_frac;

    json jf = {{"profile", "fstar"}, {"weight", curve.label}, {"expected", -rate}};
    jf.update(fit_json(fit));
    jf["pass"] = slope_ok;
    fits.push_back(jf);
    bounds.push_back({{"j", j},
                      {"upper_ratio", upper_ratio},
                      {"upper_limit", trend_tol},
                      {"upper_pass", upper_ok},
                      {"lower_ratio", lower_ratio},
                      {"lower_limit", lower_frac},
                      {"lower_from", bound_t},
                      {"lower_pass", lower_ok}});
    if (!slope_ok)
      failures.push_back({{"check", "slope"}, {"profile", "fstar"}, {"weight", curve.label},
                          {"slope", fit.slope}, {"expected", -rate}, {"tolerance", slope_tol}});
    if (!upper_ok)
      failures.push_back({{"check", "upper_trend"}, {"j", j}, {"ratio", upper_ratio}, {"limit", trend_tol}});
    if (!lower_ok)
      failures.push_back({{"check", "lower_bound"}, {"j", j}, {"ratio", lower_ratio}, {"limit", lower_frac}});
    if (!spec.quiet)
      out << "fstar " << curve.label << " slope " << format_double(fit.slope) << " upper "
          << format_double(upper_ratio) << " lower " << format_double(lower_ratio) << "\n";
  }

  const bool pass = failures.empty();
  write_json(s.dir / "decay_fits.json",
             {{"command", "linear-decay"}, {"pass", pass}, {"fits", fits}, {"bounds", bounds},
              {"failures", failures}});
  if (!pass) {
    err << "linear-decay: " << failures.size() << " check(s) failed, see decay_fits.json\n";
    return kTolerance;
  }
  return kOk;
}

// -- nonlinear-run ----------------------------------------------------------

namespace {

json summary_json(const SolverConfig& cfg, const Trajectory& traj) {
  double max_div = 0.0, max_cancel = 0.0, max_eres = 0.0, max_a = 0.0;
  for (const auto& r : traj.records) {
    max_div = std::max(max_div, r.divergence);
    max_cancel = std::max(max_cancel, std::abs(r.cancel_residual));
    max_eres = std::max(max_eres, std::abs(r.e_residual));
    if (r.E > 0.0) max_a = std::max(max_a, std::abs(r.A) / (0.5 * r.E * r.E));
  }
  json j = {{"command", "nonlinear-run"},
            {"n1", cfg.n1},
            {"n2", cfg.n2},
            {"l1", cfg.l1},
            {"l2", cfg.l2},
            {"dt", cfg.dt},
            {"t_end", cfg.t_end},
            {"scheme", scheme_name(cfg.scheme)},
            {"alpha", cfg.alpha},
            {"kappa", cfg.kappa},
            {"m", cfg.m},
            {"nonlinear", cfg.nonlinear},
            {"seed", cfg.seed},
            {"data", {{"kind", data_kind_name(cfg.data_kind)}, {"delta", cfg.data_delta}, {"norm", cfg.data_norm}}},
            {"steps", traj.steps},
            {"records", traj.records.size()},
            {"max_divergence", max_div},
            {"max_cancel_residual", max_cancel},
            {"max_e_residual", max_eres},
            {"max_A_over_half_E2", max_a}};
  if (!traj.records.empty()) {
    j["E0"] = traj.records.front().E;
    j["xm0"] = traj.records.front().xm;
  }
  j["snapshots"] = traj.snapshots;
  return j;
}

// Reruns the configuration at each delta. The largest bounded delta is the
// top of the run of ascending deltas that neither blew up nor broke
// G(T)^2 <= 4 E(0)^2 on the box.
json delta_sweep(const Setup& s, std::vector<double> deltas, std::ostream* out) {
  std::sort(deltas.begin(), deltas.end());
  json rows = json::array();
  double largest = 0.0;
  bool prefix = true;
  for (double d : deltas) {
    if (!(d > 0.0)) throw ConfigError("sweep.deltas entries must be > 0");
    SolverConfig cfg = s.solver;
    cfg.data_delta = d;
    cfg.output_dir = (s.dir / "sweep" / ("delta_" + format_double(d))).string();
    json row = {{"delta", d}};
    bool bounded = false;
    try {
      const Trajectory tr = run(cfg);
      const CumulativeRecord c = cumulative(tr.records, cfg.t_end);
      const double e0 = tr.records.front().E;
      const double q = e0 > 0.0 ? c.G * c.G / (e0 * e0) : 0.0;
      bounded = q <= 4.0;
      row["status"] = "ok";
      row["G2_over_E0_2"] = q;
    } catch (const RunBlowUp& e) {
      row["status"] = "blow-up";
      row["last_valid_time"] = e.last_valid_time();
    } catch (const DiagnosticIntegrityError& e) {
      row["status"] = "invariant-violation";
      row["message"] = e.what();
    }
    row["bounded"] = bounded;
    prefix = prefix && bounded;
    if (prefix) largest = d;
    if (out) *out << "sweep delta " << format_double(d) << ": " << row["status"].get<std::string>() << "\n";
    rows.push_back(row);
  }
  return {{"runs", rows}, {"largest_bounded_delta", largest}};
}

}  // namespace

int cmd_nonlinear_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const Setup s = load(spec);
  const SolverConfig& cfg = s.solver;
  const double cancel_tol = cfg.tolerance("cancellation", 1e-10);
  Trajectory traj;
  try {
    traj = run(cfg);
  } catch (const RunBlowUp& e) {
    json j = summary_json(cfg, e.partial());
    j["status"] = "blow-up";
    j["message"] = e.what();
    j["last_valid_time"] = e.last_valid_time();
    write_json(s.dir / "summary.json", j);
    err << "nonlinear-run: blow-up after t = " << format_double(e.last_valid_time()) << ": "
        << e.what() << "\n";
    return kBlowUp;
  }

  json j = summary_json(cfg, traj);
  const CumulativeRecord c = cumulative(traj.records, cfg.t_end);
  const double e0 = traj.records.front().E;
  j["G"] = c.G;
  j["G2"] = c.G * c.G;
  j["G2_over_E0_2"] = e0 > 0.0 ? c.G * c.G / (e0 * e0) : 0.0;
  j["G2_le_4E0_2"] = c.G * c.G <= 4.0 * e0 * e0;
  j["H"] = c.H;
  j["sup_E2"] = c.sup_E2;
  j["dissipation"] = c.dissipation;
  j["time_norms"] = {{"d1B2_L1L1", c.d1B2_L1L1}, {"B2_L2L1", c.B2_L2L1},
                     {"gradB2_L43L1", c.gradB2_L43L1}, {"d1v_L1L1", c.d1v_L1L1},
                     {"v2w_L2L2L1", c.v2w_L2L2L1}, {"v2w_L43L1", c.v2w_L43L1}};

  const auto bad = std::find_if(traj.records.begin(), traj.records.end(), [&](const auto& r) {
    return !(std::abs(r.cancel_residual) <= cancel_tol);
  });
  if (bad != traj.records.end()) {
    j["status"] = "invariant-violation";
    j["violation"] = {{"invariant", "cancellation"}, {"t", bad->t}, {"value", bad->cancel_residual},
                      {"tolerance", cancel_tol}};
    write_json(s.dir / "summary.json", j);
    err << "nonlinear-run: cancellation residual " << format_double(bad->cancel_residual)
        << " at t = " << format_double(bad->t) << "\n";
    return kInvariant;
  }
  j["status"] = "ok";
  if (s.opts.count("deltas")) j["delta_sweep"] = delta_sweep(s, opt_list(s, "deltas", {}), spec.quiet ? nullptr : &out);
  write_json(s.dir / "summary.json", j);
  if (!spec.quiet)
    out << "nonlinear-run: " << traj.steps << " steps, E0 " << format_double(e0) << ", G^2/E0^2 "
        << format_double(j["G2_over_E0_2"].get<double>()) << "\n";
  return kOk;
}

// -- audits -----------------------------------------------------------------

namespace {

int audit_lemma(const ExperimentSpec& spec, const Setup& s, std::ostream& out, std::ostream& err) {
  LemmaScanConfig lc;
  lc.xi_min = opt_double(s, "xi_min", lc.xi_min);
  lc.xi_max = opt_double(s, "xi_max", lc.xi_max);
  lc.xi_step = opt_double(s, "xi_step", lc.xi_step);
  lc.samples = opt_int(s, "samples", lc.samples);
  lc.times = opt_list(s, "times", lc.times);
  lc.seed = s.solver.seed;
  for (double t : lc.times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("lemma.times must be finite and >= 0");
  const double cap = s.solver.tolerance("lemma_ratio", 1e3);

  const LemmaScanResult res = lemma_scan(lc, true);
  {
    std::ostringstream csv;
    csv << "id,xi1,t,lhs,rhs,ratio\n";
    for (const auto& r : res.rows)
      csv << r.id << ',' << format_double(r.xi1) << ',' << format_double(r.t) << ','
          << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << format_double(r.ratio)
          << '\n';
    write_text(s.dir / "lemma_audit.csv", csv.str());
  }
  auto f_json = [&](int k) {
    json f = json::array();
    for (const Complex& z : res.samples[static_cast<std::size_t>(k)]) f.push_back({z.real(), z.imag()});
    return f;
  };
  json worst = json::array();
  json failures = json::array();
  for (const auto& r : res.worst) {
    const bool ok = std::isfinite(r.ratio) && r.ratio <= cap;
    json w = {{"id", r.id},   {"xi1", r.xi1},     {"xi2", 0.0},    {"t", r.t},
              {"lhs", r.lhs}, {"rhs", r.rhs},     {"ratio", r.ratio}, {"f", f_json(r.sample)},
              {"pass", ok}};
    worst.push_back(w);
    if (!ok) failures.push_back(w);
    if (!spec.quiet) out << r.id << " max ratio " << format_double(r.ratio) << "\n";
  }
  const bool pass = failures.empty();
  write_json(s.dir / "lemma_audit.json",
             {{"command", "audit-lemma"},
              {"scan", {{"xi_min", lc.xi_min}, {"xi_max", lc.xi_max}, {"xi_step", lc.xi_step},
                        {"times", lc.times}, {"samples", lc.samples}, {"seed", lc.seed}}},
              {"cap", cap}, {"pass", pass}, {"worst", worst}, {"failures", failures}});
  if (!pass) {
    for (const auto& f : failures)
      err << "audit-lemma: " << f["id"].get<std::string>() << " ratio " << f["ratio"].dump()
          << " at xi = (" << f["xi1"].dump() << ", 0), t = " << f["t"].dump()
          << ", f = " << f["f"].dump() << "\n";
    return kTolerance;
  }
  return kOk;
}

int audit_energy(const ExperimentSpec& spec, const Setup& s, std::ostream& out, std::ostream& err) {
  const SolverConfig& cfg = s.solver;
  const double fd_fraction = cfg.tolerance("fd_fraction", 0.1);
  const double cap = cfg.tolerance("implied_C", 1e6);
  const double cadence_tol = cfg.tolerance("cadence", 0.1);

  Trajectory traj;
  try {
    traj = run(cfg);
  } catch (const RunBlowUp& e) {
    err << "audit-energy: blow-up after t = " << format_double(e.last_valid_time()) << "\n";
    return kBlowUp;
  }
  const EmAudit a = em_inequality_audit(traj.records, cfg.m, fd_fraction);
  std::vector<DiagnosticsRecord> half;
  for (std::size_t i = 0; i < traj.records.size(); i += 2) half.push_back(traj.records[i]);
  std::optional<EmAudit> h;
  if (half.size() >= 3) h = em_inequality_audit(half, cfg.m, fd_fraction);

  {
    std::ostringstream csv;
    csv << "t,lhs,rhs,implied_C,fd_error\n";
    for (const auto& r : a.rows)
      csv << format_double(r.t) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
          << format_double(r.implied_C) << ',' << format_double(r.fd_error) << '\n';
    write_text(s.dir / "energy_audit.csv", csv.str());
  }

  json failures = json::array();
  if (!std::isfinite(a.implied_C) || a.implied_C > cap)
    failures.push_back({{"check", "implied_C"}, {"value", a.implied_C}, {"cap", cap}});
  if (!cfg.nonlinear) {
    // without the quadratic terms the inequality holds with lhs <= 0
    for (const auto& r : a.rows)
      if (r.lhs > r.fd_error) {
        failures.push_back({{"check", "linear_lhs"}, {"t", r.t}, {"lhs", r.lhs}, {"fd_error", r.fd_error}});
        break;
      }
  }
  double cadence_change = 0.0;
  if (h && (a.implied_C > 0.0 || h->implied_C > 0.0)) {
    cadence_change = std::abs(h->implied_C - a.implied_C) / std::max(a.implied_C, h->implied_C);
    if (cadence_change > cadence_tol)
      failures.push_back({{"check", "cadence"}, {"implied_C", a.implied_C},
                          {"implied_C_half", h->implied_C}, {"change", cadence_change},
                          {"tolerance", cadence_tol}});
  }
  const bool pass = failures.empty();
  write_json(s.dir / "energy_audit.json",
             {{"command", "audit-energy"},
              {"m", cfg.m},
              {"nonlinear", cfg.nonlinear},
              {"samples", a.rows.size()},
              {"implied_C", a.implied_C},
              {"implied_C_half_cadence", h ? json(h->implied_C) : json()},
              {"cadence_change", cadence_change},
              {"max_lhs", a.max_lhs},
              {"cap", cap},
              {"pass", pass},
              {"failures", failures}});
  if (!spec.quiet)
    out << "audit-energy: implied C " << format_double(a.implied_C) << ", max lhs "
        << format_double(a.max_lhs) << "\n";
  if (!pass) {
    err << "audit-energy: " << failures.dump() << "\n";
    return kTolerance;
  }
  return kOk;
}

int audit_embedding(const ExperimentSpec& spec, const Setup& s, std::ostream& out, std::ostream& err) {
  const int n = opt_int(s, "n", 256);
  const double l = opt_double(s, "l", 16.0 * std::numbers::pi);
  const std::vector<double> widths = opt_list(s, "widths", {0.5, 1.0, 2.0, 4.0});
  const double cap = s.solver.tolerance("embedding_ratio", 1e3);
  const SpectralGrid grid = make_grid(n, n, l, l);

  std::vector<SpectralState> family;
  std::vector<std::string> labels;
  for (double w : widths) {
    if (!(w > 0.0)) throw ConfigError("embedding.widths must be positive");
    family.push_back(gaussian_pair(grid, w));
    labels.push_back("gaussian_" + format_double(w));
  }
  const EmbeddingScan scan = xm_embedding_scan(family, labels, s.solver.m);

  json rows = json::array();
  json failures = json::array();
  std::ostringstream csv;
  csv << "label,xm,hm,l1,l1_refined,ratio\n";
  for (const auto& r : scan.rows) {
    const bool ok = std::isfinite(r.ratio) && r.ratio <= cap;
    json j = {{"label", r.label}, {"xm", r.xm}, {"hm", r.hm}, {"l1", r.l1},
              {"l1_refined", r.l1_refined}, {"ratio", r.ratio}, {"pass", ok}};
    rows.push_back(j);
    if (!ok) failures.push_back(j);
    csv << r.label << ',' << format_double(r.xm) << ',' << format_double(r.hm) << ','
        << format_double(r.l1) << ',' << format_double(r.l1_refined) << ',' << format_double(r.ratio)
        << '\n';
  }
  write_text(s.dir / "embedding_audit.csv", csv.str());
  const bool pass = failures.empty();
  write_json(s.dir / "embedding_audit.json",
             {{"command", "audit-embedding"}, {"n", n}, {"l", l}, {"m", s.solver.m}, {"cap", cap},
              {"max_ratio", scan.max_ratio}, {"pass", pass}, {"rows", rows}, {"failures", failures}});
  if (!spec.quiet) out << "audit-embedding: max ratio " << format_double(scan.max_ratio) << "\n";
  if (!pass) {
    err << "audit-embedding: " << failures.dump() << "\n";
    return kTolerance;
  }
  return kOk;
}

}  // namespace

int cmd_audit(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const Setup s = load(spec);
  switch (spec.command) {
    case Command::audit_lemma: return audit_lemma(spec, s, out, err);
    case Command::audit_energy: return audit_energy(spec, s, out, err);
    case Command::audit_embedding: return audit_embedding(spec, s, out, err);
    default: throw ContractViolation("cmd_audit: not an audit command");
  }
}

// -- fit --------------------------------------------------------------------

int cmd_fit(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const Setup s = load(spec);
  const auto input = s.opts.find("input");
  if (input == s.opts.end()) throw ConfigError("fit needs fit.input");
  const auto comp = s.opts.find("component");
  std::ifstream in(input->second);
  if (!in) throw ConfigError("cannot open " + input->second);

  DecayCurve curve;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (++lineno == 1 || line.empty()) continue;
    std::stringstream ss(line);
    std::string t, v, label;
    if (!std::getline(ss, t, ',') || !std::getline(ss, v, ','))
      throw ConfigError(input->second + ":" + std::to_string(lineno) + ": expected time,value");
    std::getline(ss, label);
    if (comp != s.opts.end() && label != comp->second) continue;
    try {
      curve.times.push_back(std::stod(t));
      curve.values.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw ConfigError(input->second + ":" + std::to_string(lineno) + ": bad number");
    }
    curve.label = label;
  }
  if (curve.times.empty()) throw ConfigError("fit: no samples in " + input->second);
  const double t_lo = opt_double(s, "t_lo", 100.0);
  const double t_hi = opt_double(s, "t_hi", curve.times.back());
  if (!(t_lo < t_hi)) throw ConfigError("fit window needs t_lo < t_hi");

  const DecayFit fit = fit_decay(curve, t_lo, t_hi);
  json j = {{"command", "fit"}, {"input", input->second}, {"component", curve.label}};
  j.update(fit_json(fit));
  bool pass = true;
  if (s.opts.count("expected")) {
    const double expected = opt_double(s, "expected", 0.0);
    const double tol = s.solver.tolerance("slope", 0.05);
    pass = std::abs(fit.slope - expected) <= tol;
    j["expected"] = expected;
    j["tolerance"] = tol;
    j["pass"] = pass;
  }
  write_json(s.dir / "fit.json", j);
  if (!spec.quiet) out << "fit: slope " << format_double(fit.slope) << "\n";
  if (!pass) {
    err << "fit: slope " << format_double(fit.slope) << " outside tolerance\n";
    return kTolerance;
  }
  return kOk;
}

// -- dispatch ---------------------------------------------------------------

int run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  const std::string name = command_name(spec.command);
  try {
    switch (spec.command) {
      case Command::linear_decay: return cmd_linear_decay(spec, out, err);
      case Command::nonlinear_run: return cmd_nonlinear_run(spec, out, err);
      case Command::fit: return cmd_fit(spec, out, err);
      default: return cmd_audit(spec, out, err);
    }
  } catch (const ConfigError& e) {
    err << name << ": usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractViolation& e) {
    err << name << ": usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const BlowUpError& e) {
    err << name << ": blow-up after t = " << format_double(e.last_valid_time()) << ": " << e.what() << "\n";
    return kBlowUp;
  } catch (const DiagnosticIntegrityError& e) {
    err << name << ": invariant violation: " << e.what() << "\n";
    return kInvariant;
  } catch (const AuditResolutionError& e) {
    err << name << ": " << e.what() << "\n";
    return kTolerance;
  } catch (const NumericalAccuracyError& e) {
    err << name << ": " << e.what() << "\n";
    return kTolerance;
  } catch (const FitDomainError& e) {
    err << name << ": " << e.what() << "\n";
    return kTolerance;
  } catch (const std::exception& e) {
    err << name << ": error: " << e.what() << "\n";
    return kFailure;
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"2D velocity-damped MHD: linear decay, nonlinear runs, audits"};
  app.name("mhd");
  std::string command, config, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> tolerances;
  bool quiet = false;
  app.add_option("command", command,
                 "linear-decay | nonlinear-run | audit-lemma | audit-energy | audit-embedding | fit")
      ->required();
  app.add_option("--config", config, "key = value config file");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_option("--tolerance", tolerances, "KEY=VAL, repeatable")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_flag("--quiet", quiet, "no progress output");

  ExperimentSpec spec;
  try {
    app.parse(argc, argv);
    spec.command = parse_command(command);
    for (const auto& kv : tolerances) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--tolerance expects KEY=VAL");
      std::size_t pos = 0;
      double x = 0.0;
      const std::string v = kv.substr(eq + 1);
      try {
        x = std::stod(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != v.size()) throw ConfigError("--tolerance: bad value '" + v + "'");
      spec.tolerances[kv.substr(0, eq)] = x;
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "mhd: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    err << "mhd: " << e.what() << "\n";
    return kUsage;
  }
  spec.config_path = config;
  spec.output_dir = out_dir;
  if (seed_opt->count()) spec.seed = seed;
  spec.quiet = quiet;
  return run(spec, out, err);
}

}  // namespace mhd::cli
