#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mhd/diagnostics.hpp"
#include "mhd/errors.hpp"
#include "mhd/linear_propagator.hpp"
#include "mhd/spectral_core.hpp"

namespace mhd {

enum class Scheme { etdrk2, ifrk4 };
enum class DataKind { zero, prop25, random, snapshot };

const char* scheme_name(Scheme s);
const char* data_kind_name(DataKind k);

struct SolverConfig {
  int n1 = 64;
  int n2 = 64;
  double l1 = 6.283185307179586;
  double l2 = 6.283185307179586;
  double dt = 0.01;
  double t_end = 1.0;
  Scheme scheme = Scheme::etdrk2;
  double alpha = 0.0;
  double kappa = 1.0;
  std::uint64_t seed = 1;

  DataKind data_kind = DataKind::zero;
  double data_delta = 1e-2;
  std::string data_norm = "xm";  // norm fixed to delta: xm, hm or l2
  double data_peak = 4.0;        // random spectrum scale in units of the mode spacing
  std::string data_path;         // snapshot initial data

  int output_every = 1;  // steps between diagnostics records
  int snapshot_every = 0;  // steps between snapshots; 0 writes only the end points
  std::string output_dir;

  int m = 4;
  bool nonlinear = true;
  bool keep_states = false;

  std::map<std::string, double> tolerances;

  DampingModel damping() const { return {alpha, kappa}; }
  /// Throws ConfigError.
  void validate() const;
  double tolerance(const std::string& key, double fallback) const;
};

/// Flat "key = value" lines, '#' starts a comment. Unknown keys and
/// malformed values raise ConfigError. Keys: n1, n2, l1, l2, dt, t_end,
/// scheme, alpha, kappa, seed, m, nonlinear, data.kind, data.delta, data.norm,
/// data.peak, data.path, output.every, output.snapshot_every, output.dir and
/// tolerance.<name>.
SolverConfig parse_config(std::istream& in);
/// The raw (key, value) pairs of a config stream, in file order.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in);
SolverConfig load_config(const std::filesystem::path& path);
void apply_config_value(SolverConfig& cfg, const std::string& key, const std::string& value);

/// Quadratic terms: -P div(v (x) v - B (x) B) and curl(v x B), both
/// dealiased and projected. The input is dealiased before the products.
SpectralState nonlinear_rhs(const SpectralState& state);

/// One-step integrator with the per-mode linear blocks cached.
class Stepper {
 public:
  Stepper(const SpectralGrid& grid, double dt, Scheme scheme, DampingModel damping,
          bool nonlinear = true);

  /// Throws BlowUpError on non-finite coefficients or when dt exceeds the
  /// advective bound 0.5 min(dx) / (1 + max|v| + max|B|).
  SpectralState step(const SpectralState& state) const;

  /// kappa ||(-Delta)^{alpha/2} v||^2
  double dissipation_rate(const SpectralState& state) const;
  double dt() const noexcept { return dt_; }

 private:
  std::size_t key(int i1, std::size_t idx) const { return per_mode_ ? idx : static_cast<std::size_t>(i1); }
  void apply(const std::vector<Mat2>& blocks, const SpectralState& in, SpectralState& out) const;

  SpectralGrid grid_;
  double dt_;
  Scheme scheme_;
  DampingModel damping_;
  bool nonlinear_;
  bool per_mode_;
  std::vector<Mat2> e_full_, e_half_, phi1_, phi2_;
  std::vector<double> symbol_;
};

SpectralState step(const SpectralState& state, const SolverConfig& cfg);

/// Initial data of the configuration: sampled, dealiased, projected,
/// zero-meaned and scaled so the selected norm equals data.delta.
SpectralState initial_state(const SolverConfig& cfg);

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  std::vector<SpectralState> states;  // only with keep_states
  std::vector<std::string> snapshots;
  SpectralState final_state;
  int steps = 0;
};

/// Raised by run() on blow-up; carries everything recorded before it.
class RunBlowUp : public BlowUpError {
 public:
  RunBlowUp(const BlowUpError& cause, Trajectory partial)
      : BlowUpError(cause.what(), cause.last_valid_time()), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// Integrates to t_end, recording diagnostics every output.every steps and at
/// t_end. Hard invariants (divergence residual, |A| <= E^2/2) raise
/// DiagnosticIntegrityError; the divergence tolerance is tolerance.divergence.
Trajectory run(const SolverConfig& cfg);

}  // namespace mhd
