#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mhd/linear_propagator.hpp"
#include "mhd/spectral_core.hpp"

namespace mhd {

/// sum_{|alpha| <= m} xi^{2 alpha} over multi-indices alpha = (a1, a2).
double multi_index_weight(double xi1, double xi2, int m);

/// Fourier-side norms of grid coefficients read as densities on R^2:
/// L1 is 2 pi sum |c|, the mixed L2_{xi1} L1_{xi2} norm is
/// sqrt(2 pi l1) (sum_{xi1} (sum_{xi2} |c|)^2)^{1/2}.
double fourier_l1(const SpectralGrid& grid, std::span<const double> magnitudes);
double fourier_l2l1(const SpectralGrid& grid, std::span<const double> magnitudes);

/// ||f||_{H^m} + ||sqrt|xi1|/|xi| f^||_{L2 L1} + |||(f3, f4)^|/|xi|||_{L1}
///   + |||(f3, f4)^|/sqrt|xi1|||_{L1}
/// The xi1 = 0 column is dropped from the singular weights; weights are
/// evaluated at the mode wavenumbers.
double xm_norm(const SpectralState& state, int m);

struct DiagnosticsRecord {
  double t = 0.0;
  int m = 0;
  double E = 0.0;
  double A = 0.0;
  double sup_d1v = 0.0;
  double sup_B2 = 0.0;
  double xm = 0.0;
  std::array<double, 4> l2{};  // L2 norm of v1, v2, B1, B2
  double e_residual = 0.0;     // filled in by the time stepper
  double cancel_residual = 0.0;
  std::array<double, 3> region_mass{};  // squared L2 mass on omega1..3
  double divergence = 0.0;
  double hermitian = 0.0;

  // squared norms entering G and the energy inequality
  double v_hm2 = 0.0;    // ||v||_{H^m}^2
  double B_hm2 = 0.0;    // ||B||_{H^m}^2
  double d1B_hm2 = 0.0;  // ||d1 B||_{H^{m-1}}^2

  // integrands of the H(T) time norms
  double d1B2_l1 = 0.0;    // ||(d1 B2)^||_{L1}
  double B2_l1 = 0.0;      // ||B2^||_{L1}
  double gradB2_l1 = 0.0;  // ||(grad B2)^||_{L1}
  double d1v_l1 = 0.0;     // ||(d1 v)^||_{L1}
  double v2w_l2l1 = 0.0;   // || |v2^| / sqrt|xi1| ||_{L2_{xi1} L1_{xi2}}
  double v2w_l1 = 0.0;     // || |v2^| / sqrt|xi1| ||_{L1}

  double l2_total() const;
};

/// Throws ContractViolation for m < 1, DiagnosticIntegrityError when
/// |A| > E^2 / 2.
DiagnosticsRecord instantaneous(const SpectralState& state, int m);

/// l1 l2 sum |xi|^{2m} Re(i xi1 (B conj(v) + v conj(B))) relative to the size
/// of the two pairings; vanishes identically.
double cancellation_residual(const SpectralState& state, int m);

struct CumulativeRecord {
  double T = 0.0;
  double G = 0.0;
  double H = 0.0;
  double sup_E2 = 0.0;
  double dissipation = 0.0;  // int ||v||_{H^m}^2 + ||d1 B||_{H^{m-1}}^2
  // L^p_T norms, (int f^p)^{1/p}
  double d1B2_L1L1 = 0.0;
  double B2_L2L1 = 0.0;
  double gradB2_L43L1 = 0.0;
  double d1v_L1L1 = 0.0;
  double v2w_L2L2L1 = 0.0;
  double v2w_L43L1 = 0.0;
};

/// Trapezoid quadrature over the records with t <= T. Throws
/// IncompleteHistoryError if the history does not start at 0, stops short of
/// T, or has a gap wider than 1.5x the median spacing.
CumulativeRecord cumulative(std::span<const DiagnosticsRecord> history, double T);

struct EmAuditRow {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double implied_C = 0.0;  // lhs+ / rhs
  double fd_error = 0.0;
};

struct EmAudit {
  std::vector<EmAuditRow> rows;
  double implied_C = 0.0;
  double max_lhs = 0.0;
};

/// d/dt (E^2 + A) by centered differences (one-sided at the ends). The
/// difference error is estimated from the wide stencil; if it exceeds
/// resolution_fraction of the summed lhs magnitudes the audit throws
/// AuditResolutionError.
EmAudit em_inequality_audit(std::span<const DiagnosticsRecord> history, int m,
                            double resolution_fraction = 0.1);

struct InterpolationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

/// Radial f(|x|) on R^d, supported in |x| <= r_max.
struct RadialProfile {
  std::function<double(double)> f;
  double r_max = 10.0;
  double r_min = 0.0;  // f vanishes on [0, r_min)
};

/// ||f||_{L1} against |||x|^{d/2+p} f||^{q/(p+q)} |||x|^{d/2-q} f||^{p/(p+q)}.
/// Throws AuditInapplicableError when the second weighted norm diverges at 0.
InterpolationResult interpolation_audit(const RadialProfile& f, double p, double q, int d = 2);

/// ||g^||_{L1} against ||d1 g||_{H1}^{1/2} ||g||_{H1}^{1/2} on the grid.
InterpolationResult interpolation_audit(const SpectralGrid& grid, std::span<const Complex> g);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int samples = 0;
};

/// Least squares of log(value) against log(1 + t) over t in [t_lo, t_hi].
/// Throws ContractViolation for fewer than 10 samples, FitDomainError for a
/// non-positive value.
DecayFit fit_decay(const DecayCurve& curve, double t_lo, double t_hi);

struct EmbeddingRow {
  std::string label;
  double xm = 0.0;
  double hm = 0.0;
  double l1 = 0.0;
  double l1_refined = 0.0;  // Riemann sum on the twice finer grid
  double ratio = 0.0;
};

struct EmbeddingScan {
  std::vector<EmbeddingRow> rows;
  double max_ratio = 0.0;
};

/// Physical-space L1 norm of |(f1, .., f4)| by a Riemann sum on the grid,
/// optionally after spectral interpolation to `refine` times as many points.
double physical_l1(const SpectralState& state, int refine = 1);

/// Divergence-free pair v = B = grad-perp of a Gaussian of the given width,
/// centred in the box.
SpectralState gaussian_pair(const SpectralGrid& grid, double width);

EmbeddingScan xm_embedding_scan(std::span<const SpectralState> family,
                                std::span<const std::string> labels, int m);

// -- output -----------------------------------------------------------------

inline constexpr const char* kDiagnosticsHeader =
    "t,E,A,sup_d1v,sup_B2,xm,l2_v1,l2_v2,l2_B1,l2_B2,e_residual,cancel_residual,"
    "mass_omega1,mass_omega2,mass_omega3";

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsRecord> records);
void write_decay_csv(std::ostream& out, const DecayCurve& curve);

}  // namespace mhd
