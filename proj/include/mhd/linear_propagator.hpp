#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mhd/normal_modes.hpp"
#include "mhd/spectral_core.hpp"

namespace mhd {

/// Dense 2x2 complex matrix acting on one (v_j, B_j) pair.
struct Mat2 {
  Complex m00{1.0, 0.0};
  Complex m01{};
  Complex m10{};
  Complex m11{1.0, 0.0};

  static Mat2 identity() { return {}; }
  Mat2 operator*(const Mat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
  std::array<Complex, 2> apply(Complex x, Complex y) const {
    return {m00 * x + m01 * y, m10 * x + m11 * y};
  }
};

double max_abs_diff(const Mat2& a, const Mat2& b);
double operator_norm(const Mat2& a);

/// Per-component block K = [[c, i xi1], [i xi1, 0]] of the linear operator,
/// c the velocity damping symbol.
Mat2 generator_block(double xi1, double damping = 1.0);

/// e^{-tK} in closed form: e^{-lambda_+ t} I + D(t) (lambda_+ I - K).
struct PropagatorBlock {
  double xi1 = 0.0;
  double t = 0.0;
  Mat2 entries;
};

/// Throws ContractViolation for t < 0.
PropagatorBlock propagator_block(double xi1, double t, double damping = 1.0);

/// phi_k(z) = sum_n z^n / (n + k)!, k >= 0 (phi_0 = exp).
Complex phi(int k, Complex z);

/// phi_k(-dt K) via the two-point Hermite form; stable at the confluent point.
/// Throws ContractViolation for dt <= 0.
Mat2 phi_block(int k, double xi1, double dt, double damping = 1.0);
inline Mat2 phi1_block(double xi1, double dt, double damping = 1.0) {
  return phi_block(1, xi1, dt, damping);
}

/// Velocity dissipation kappa (-Delta)^alpha; symbol kappa |xi|^{2 alpha}.
struct DampingModel {
  double alpha = 0.0;
  double kappa = 1.0;
  double symbol(double xi1, double xi2) const;
};

/// Exact linear evolution of a grid state over time t. Grid coefficients use
/// d/dx -> +i xi, so the mode at grid wavenumber xi1 evolves with the block at
/// -xi1 (the operator's own Fourier convention has d/dx -> -i xi).
SpectralState apply_semigroup(const SpectralState& state, double t,
                              const DampingModel& damping = {});

// -- optimal-decay profiles -------------------------------------------------

/// Smooth cutoff exp(1 - 1/(1 - 16 r^2)) on [0, 1/4), zero beyond; sigma(0) = 1.
double cutoff_sigma(double r);

enum class ProfileKind { fstar, prop25, custom };

struct ProfileParams {
  // fstar factors: f^ = phi(xi1) sigma(|xi1|) varphi(xi2)
  std::function<Complex(double)> phi;     // default: 1
  std::function<Complex(double)> varphi;  // default: exp(-xi2^2) sigma(|xi2|)
  // custom profiles
  std::function<Vec4(double, double)> custom;
  double support1 = 0.25;
  double support2 = 0.25;
  bool scalar = false;
};

/// Closed-form spectral initial data, supported in [-support1, support1] x
/// [-support2, support2]. Scalar profiles carry their value in slot 0.
struct ProfileData {
  ProfileKind kind = ProfileKind::custom;
  bool scalar = false;
  double support1 = 0.25;
  double support2 = 0.25;
  std::function<Vec4(double, double)> eval;

  Vec4 operator()(double xi1, double xi2) const { return eval(xi1, xi2); }
};

/// Throws ContractViolation when fstar is requested with phi(0) = 0 or a custom
/// profile has no evaluator.
ProfileData build_profile(ProfileKind kind, const ProfileParams& params = {});
const char* profile_name(ProfileKind kind);

// -- continuous-frequency decay curves --------------------------------------

struct ComponentWeight {
  Component component;
};
/// ||xi1^j e^{-lambda_- t} f^||_{L2}
struct XiPowerWeight {
  int j = 0;
};
using DecayWeight = std::variant<ComponentWeight, XiPowerWeight>;
std::string weight_label(const DecayWeight& w);

struct DecayCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::string label;
};

struct QuadratureOptions {
  double rel_tol = 1e-8;
  int nodes = 64;
  int base_depth = 16;     // dyadic shells toward xi1 = 0 at the first level
  int max_refinements = 4;
};

/// L2(R^2) norms of the exact linear solution by composite Gauss-Legendre
/// quadrature over the support, refined until two successive levels agree to
/// rel_tol at every time. Throws NumericalAccuracyError past the cap.
DecayCurve linear_decay_curve(const ProfileData& profile, const DecayWeight& weight,
                              std::span<const double> times,
                              const QuadratureOptions& opts = {});

std::vector<double> log_spaced_times(double t_lo, double t_hi, int n);

}  // namespace mhd
