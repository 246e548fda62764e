#include "mhd/nonlinear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mhd/errors.hpp"
#include "mhd/random.hpp"

namespace mhd {

const char* scheme_name(Scheme s) { return s == Scheme::etdrk2 ? "etdrk2" : "ifrk4"; }

const char* data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::zero: return "zero";
    case DataKind::prop25: return "prop25";
    case DataKind::random: return "random";
    default: return "snapshot";
  }
}

// -- configuration ----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -(1LL << 30) || x > (1LL << 30)) throw ConfigError("config: " + key + " out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config: " + key + " expects true or false, got '" + v + "'");
}

}  // namespace

void apply_config_value(SolverConfig& cfg, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "n1") cfg.n1 = to_int(key, v);
  else if (key == "n2") cfg.n2 = to_int(key, v);
  else if (key == "l1") cfg.l1 = to_double(key, v);
  else if (key == "l2") cfg.l2 = to_double(key, v);
  else if (key == "dt") cfg.dt = to_double(key, v);
  else if (key == "t_end") cfg.t_end = to_double(key, v);
  else if (key == "alpha") cfg.alpha = to_double(key, v);
  else if (key == "kappa") cfg.kappa = to_double(key, v);
  else if (key == "m") cfg.m = to_int(key, v);
  else if (key == "nonlinear") cfg.nonlinear = to_bool(key, v);
  else if (key == "seed") {
    if (v.empty() || v[0] == '-') throw ConfigError("config: seed must be non-negative");
    try {
      std::size_t pos = 0;
      cfg.seed = std::stoull(v, &pos);
      if (pos != v.size()) throw ConfigError("config: bad seed '" + v + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("config: bad seed '" + v + "'");
    }
  } else if (key == "scheme") {
    if (v == "etdrk2" || v == "ETDRK2") cfg.scheme = Scheme::etdrk2;
    else if (v == "ifrk4" || v == "IFRK4") cfg.scheme = Scheme::ifrk4;
    else throw ConfigError("config: unknown scheme '" + v + "'");
  } else if (key == "data.kind") {
    if (v == "zero") cfg.data_kind = DataKind::zero;
    else if (v == "prop25") cfg.data_kind = DataKind::prop25;
    else if (v == "random") cfg.data_kind = DataKind::random;
    else if (v == "snapshot") cfg.data_kind = DataKind::snapshot;
    else throw ConfigError("config: unknown data.kind '" + v + "'");
  } else if (key == "data.delta") cfg.data_delta = to_double(key, v);
  else if (key == "data.norm") cfg.data_norm = v;
  else if (key == "data.peak") cfg.data_peak = to_double(key, v);
  else if (key == "data.path") cfg.data_path = v;
  else if (key == "output.every") cfg.output_every = to_int(key, v);
  else if (key == "output.snapshot_every") cfg.snapshot_every = to_int(key, v);
  else if (key == "output.dir") cfg.output_dir = v;
  else if (key.rfind("tolerance.", 0) == 0 && key.size() > 10)
    cfg.tolerances[key.substr(10)] = to_double(key, v);
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

SolverConfig parse_config(std::istream& in) {
  SolverConfig cfg;
  for (const auto& [key, value] : read_key_values(in)) apply_config_value(cfg, key, value);
  return cfg;
}

SolverConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in);
}

double SolverConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

void SolverConfig::validate() const {
  make_grid(n1, n2, l1, l2);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
  if (!(dt < t_end)) throw ConfigError("dt must be smaller than t_end");
  const double steps = t_end / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
    throw ConfigError("t_end must be a whole number of steps dt");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be >= 0");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (output_every < 1) throw ConfigError("output.every must be >= 1");
  if (snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
  if (!(data_delta >= 0.0) || !std::isfinite(data_delta)) throw ConfigError("data.delta must be >= 0");
  if (data_norm != "xm" && data_norm != "hm" && data_norm != "l2")
    throw ConfigError("data.norm must be xm, hm or l2");
  if (!(data_peak > 0.0)) throw ConfigError("data.peak must be positive");
  if (data_kind == DataKind::snapshot && data_path.empty())
    throw ConfigError("data.kind = snapshot needs data.path");
}

// -- nonlinear terms --------------------------------------------------------

namespace {

constexpr Complex kI{0.0, 1.0};

// tendency plus max|v| + max|B| over the grid
SpectralState quadratic_terms(const SpectralState& state, double* speed) {
  const auto& g = state.grid;
  SpectralState u = dealias(state);
  std::array<PhysicalField, 4> f;
  for (std::size_t c = 0; c < 4; ++c) f[c] = to_physical(g, u.coeffs[c]);

  const std::size_t n = g.size();
  PhysicalField q11(n), q12(n), q22(n), w(n);
  double vmax = 0.0, bmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v1 = f[0][i], v2 = f[1][i], b1 = f[2][i], b2 = f[3][i];
    q11[i] = v1 * v1 - b1 * b1;
    q12[i] = v1 * v2 - b1 * b2;
    q22[i] = v2 * v2 - b2 * b2;
    w[i] = v1 * b2 - v2 * b1;
    vmax = std::max(vmax, v1 * v1 + v2 * v2);
    bmax = std::max(bmax, b1 * b1 + b2 * b2);
  }
  if (speed) *speed = std::sqrt(vmax) + std::sqrt(bmax);
  const Field h11 = to_spectral(g, q11), h12 = to_spectral(g, q12), h22 = to_spectral(g, q22),
              hw = to_spectral(g, w);

  SpectralState out = SpectralState::zeros(g, state.time);
  for (int i1 = 0; i1 < g.n1(); ++i1) {
    const Complex d1 = kI * g.xi1(i1);
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const std::size_t idx = g.index(i1, i2);
      if (!g.is_retained(i1, i2)) continue;
      const Complex d2 = kI * g.xi2(i2);
      out.coeffs[0][idx] = -(d1 * h11[idx] + d2 * h12[idx]);
      out.coeffs[1][idx] = -(d1 * h12[idx] + d2 * h22[idx]);
      out.coeffs[2][idx] = d2 * hw[idx];
      out.coeffs[3][idx] = -d1 * hw[idx];
    }
  }
  leray_project_pair(g, out.coeffs[0], out.coeffs[1]);
  leray_project_pair(g, out.coeffs[2], out.coeffs[3]);
  zero_mean(out);
  return out;
}

// y += a x
void axpy(SpectralState& y, double a, const SpectralState& x) {
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < y.coeffs[c].size(); ++i) y.coeffs[c][i] += a * x.coeffs[c][i];
}

SpectralState combine(const SpectralState& x, double a, const SpectralState& y) {
  SpectralState out = x;
  axpy(out, a, y);
  return out;
}

bool all_finite(const SpectralState& s) {
  for (const auto& c : s.coeffs)
    for (const auto& z : c)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

double half_l2_energy(const SpectralState& s) {
  double sum = 0.0;
  for (const auto& c : s.coeffs)
    for (const auto& z : c) sum += std::norm(z);
  return 0.5 * s.grid.l2_weight() * sum;
}

}  // namespace

SpectralState nonlinear_rhs(const SpectralState& state) { return quadratic_terms(state, nullptr); }

// -- stepping ---------------------------------------------------------------

Stepper::Stepper(const SpectralGrid& grid, double dt, Scheme scheme, DampingModel damping,
                 bool nonlinear)
    : grid_(grid), dt_(dt), scheme_(scheme), damping_(damping), nonlinear_(nonlinear),
      per_mode_(damping.alpha != 0.0) {
  if (!(dt > 0.0)) throw ContractViolation("Stepper: dt must be > 0");
  const std::size_t count = per_mode_ ? grid.size() : static_cast<std::size_t>(grid.n1());
  e_full_.resize(count);
  if (scheme == Scheme::etdrk2) {
    phi1_.resize(count);
    phi2_.resize(count);
  } else {
    e_half_.resize(count);
  }
  symbol_.resize(grid.size());
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    // grid coefficients evolve with the block at -xi1
    const double x = -grid.xi1(i1);
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const std::size_t idx = grid.index(i1, i2);
      const double c = damping.symbol(grid.xi1(i1), grid.xi2(i2));
      symbol_[idx] = c;
      if (!per_mode_ && i2 > 0) continue;
      const std::size_t k = key(i1, idx);
      e_full_[k] = propagator_block(x, dt, c).entries;
      if (scheme == Scheme::etdrk2) {
        phi1_[k] = phi_block(1, x, dt, c);
        phi2_[k] = phi_block(2, x, dt, c);
      } else {
        e_half_[k] = propagator_block(x, 0.5 * dt, c).entries;
      }
    }
  }
}

void Stepper::apply(const std::vector<Mat2>& blocks, const SpectralState& in,
                    SpectralState& out) const {
  for (int i1 = 0; i1 < grid_.n1(); ++i1) {
    for (int i2 = 0; i2 < grid_.n2(); ++i2) {
      const std::size_t idx = grid_.index(i1, i2);
      const Mat2& b = blocks[key(i1, idx)];
      for (std::size_t j = 0; j < 2; ++j) {
        const auto r = b.apply(in.coeffs[j][idx], in.coeffs[j + 2][idx]);
        out.coeffs[j][idx] = r[0];
        out.coeffs[j + 2][idx] = r[1];
      }
    }
  }
}

SpectralState Stepper::step(const SpectralState& u) const {
  if (!(u.grid == grid_)) throw ContractViolation("Stepper: state on a different grid");
  const double h = dt_;
  SpectralState out = SpectralState::zeros(grid_, u.time + h);
  apply(e_full_, u, out);

  if (nonlinear_) {
    double speed = 0.0;
    auto nl = [&](const SpectralState& s) {
      SpectralState r = quadratic_terms(s, &speed);
      const double bound = 0.5 * std::min(grid_.dx1(), grid_.dx2()) / (1.0 + speed);
      if (!std::isfinite(speed) || h > bound) {
        std::ostringstream msg;
        msg << "advective step bound violated (dt = " << h << ", bound = " << bound << ")";
        throw BlowUpError(msg.str(), u.time);
      }
      return r;
    };
    SpectralState tmp = SpectralState::zeros(grid_, u.time);
    if (scheme_ == Scheme::etdrk2) {
      const SpectralState nu = nl(u);
      apply(phi1_, nu, tmp);
      axpy(out, h, tmp);  // a = E u + h phi1 N(u)
      SpectralState diff = nl(out);
      axpy(diff, -1.0, nu);
      apply(phi2_, diff, tmp);
      axpy(out, h, tmp);
    } else {
      SpectralState eu = out;  // E_h u
      SpectralState ehu = SpectralState::zeros(grid_, u.time);
      apply(e_half_, u, ehu);
      const SpectralState k1 = nl(u);
      SpectralState a = SpectralState::zeros(grid_, u.time);
      apply(e_half_, combine(u, 0.5 * h, k1), a);
      const SpectralState k2 = nl(a);
      const SpectralState k3 = nl(combine(ehu, 0.5 * h, k2));
      apply(e_half_, k3, tmp);
      const SpectralState k4 = nl(combine(eu, h, tmp));
      // E_h k1 + 2 E_{h/2}(k2 + k3) + k4
      SpectralState acc = SpectralState::zeros(grid_, u.time);
      apply(e_full_, k1, acc);
      apply(e_half_, combine(k2, 1.0, k3), tmp);
      axpy(acc, 2.0, tmp);
      axpy(acc, 1.0, k4);
      axpy(out, h / 6.0, acc);
    }
  }
  zero_mean(out);
  if (!all_finite(out)) throw BlowUpError("non-finite coefficients", u.time);
  return out;
}

double Stepper::dissipation_rate(const SpectralState& s) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i)
    sum += symbol_[i] * (std::norm(s.coeffs[0][i]) + std::norm(s.coeffs[1][i]));
  return grid_.l2_weight() * sum;
}

SpectralState step(const SpectralState& state, const SolverConfig& cfg) {
  return Stepper(state.grid, cfg.dt, cfg.scheme, cfg.damping(), cfg.nonlinear).step(state);
}

// -- initial data -----------------------------------------------------------

namespace {

void hermitian_symmetrize(const SpectralGrid& g, Field& f) {
  Field out(f.size());
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const std::size_t idx = g.index(i1, i2);
      out[idx] = 0.5 * (f[idx] + std::conj(f[g.mirror_index(i1, i2)]));
    }
  f = std::move(out);
}

// v = (d2 psi, -d1 psi)
void set_from_stream(const SpectralGrid& g, const Field& psi, Field& w1, Field& w2) {
  w1 = derivative(g, psi, 2, 1);
  w2 = derivative(g, psi, 1, 1);
  for (auto& z : w2) z = -z;
}

double data_norm(const SpectralState& s, const std::string& which, int m) {
  if (which == "xm") return xm_norm(s, m);
  double sum = 0.0;
  for (const auto& c : s.coeffs) {
    const double x = sobolev_norm(s.grid, c, which == "hm" ? m : 0);
    sum += x * x;
  }
  return std::sqrt(sum);
}

}  // namespace

SpectralState initial_state(const SolverConfig& cfg) {
  cfg.validate();
  const SpectralGrid g = make_grid(cfg.n1, cfg.n2, cfg.l1, cfg.l2);
  SpectralState s = SpectralState::zeros(g);
  switch (cfg.data_kind) {
    case DataKind::zero:
      return s;
    case DataKind::snapshot: {
      SpectralState snap = read_snapshot(cfg.data_path);
      if (!(snap.grid == g)) throw ConfigError("snapshot grid does not match the config");
      snap.time = 0.0;
      return snap;
    }
    case DataKind::random: {
      Rng rng(cfg.seed);
      Field pv(g.size()), pb(g.size());
      const double unit = std::min(g.dk1(), g.dk2()) * cfg.data_peak;
      for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
          const double r = std::hypot(g.xi1(i1), g.xi2(i2)) / unit;
          const double amp = std::exp(-r * r);
          const std::size_t idx = g.index(i1, i2);
          pv[idx] = amp * Complex{rng.normal(), rng.normal()};
          pb[idx] = amp * Complex{rng.normal(), rng.normal()};
        }
      hermitian_symmetrize(g, pv);
      hermitian_symmetrize(g, pb);
      set_from_stream(g, pv, s.coeffs[0], s.coeffs[1]);
      set_from_stream(g, pb, s.coeffs[2], s.coeffs[3]);
      break;
    }
    case DataKind::prop25: {
      // the profile is odd and real in xi; the factor i makes it the transform
      // of a real field. Grid coefficients at xi hold the profile at -xi.
      const ProfileData p = build_profile(ProfileKind::prop25);
      const double scale = 1.0 / g.density_scale();
      for (int i1 = 0; i1 < g.n1(); ++i1)
        for (int i2 = 0; i2 < g.n2(); ++i2) {
          const Vec4 f = p(-g.xi1(i1), -g.xi2(i2));
          const std::size_t idx = g.index(i1, i2);
          for (std::size_t c = 0; c < 4; ++c) s.coeffs[c][idx] = kI * scale * f[c];
        }
      break;
    }
  }
  s = leray_project(dealias(s));
  zero_mean(s);
  const double norm = data_norm(s, cfg.data_norm, cfg.m);
  if (!(norm > 0.0)) throw ConfigError("initial data vanishes on this grid");
  const double factor = cfg.data_delta / norm;
  for (auto& c : s.coeffs)
    for (auto& z : c) z *= factor;
  return s;
}

// -- driver -----------------------------------------------------------------

Trajectory run(const SolverConfig& cfg) {
  cfg.validate();
  SpectralState state = initial_state(cfg);
  const Stepper stepper(state.grid, cfg.dt, cfg.scheme, cfg.damping(), cfg.nonlinear);
  const long long nsteps = std::llround(cfg.t_end / cfg.dt);
  const double div_tol = cfg.tolerance("divergence", 1e-12);

  std::filesystem::path dir;
  if (!cfg.output_dir.empty()) {
    dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
  }
  Trajectory traj;
  const double e0 = half_l2_energy(state);
  double dissipated = 0.0;
  double rate = stepper.dissipation_rate(state);

  auto flush_csv = [&] {
    if (dir.empty()) return;
    std::ofstream out(dir / "diagnostics.csv", std::ios::binary);
    write_diagnostics_csv(out, traj.records);
  };
  auto snapshot = [&](long long n) {
    if (dir.empty()) return;
    char name[32];
    std::snprintf(name, sizeof name, "snap_%06lld.mhd2", n);
    write_snapshot(dir / name, state);
    traj.snapshots.push_back(name);
  };
  auto record = [&] {
    DiagnosticsRecord r = instantaneous(state, cfg.m);
    if (!std::isfinite(r.E)) throw BlowUpError("non-finite energy", state.time);
    r.e_residual = half_l2_energy(state) - e0 + dissipated;
    if (r.divergence > div_tol)
      throw DiagnosticIntegrityError("divergence residual " + format_double(r.divergence) +
                                     " at t = " + format_double(r.t));
    traj.records.push_back(r);
    if (cfg.keep_states) traj.states.push_back(state);
  };

  try {
    record();
    snapshot(0);
    for (long long n = 1; n <= nsteps; ++n) {
      SpectralState next = stepper.step(state);
      next.time = static_cast<double>(n) * cfg.dt;
      const double next_rate = stepper.dissipation_rate(next);
      dissipated += 0.5 * cfg.dt * (rate + next_rate);
      rate = next_rate;
      state = std::move(next);
      traj.steps = static_cast<int>(n);
      if (n % cfg.output_every == 0 || n == nsteps) record();
      if (n == nsteps || (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0)) snapshot(n);
    }
  } catch (const BlowUpError& e) {
    traj.final_state = state;
    flush_csv();
    throw RunBlowUp(e, std::move(traj));
  }
  traj.final_state = state;
  flush_csv();
  return traj;
}

}  // namespace mhd
