#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mhd {

using Complex = std::complex<double>;
using Vec4 = std::array<Complex, 4>;
using Mat4 = std::array<Vec4, 4>;

struct Wavenumber {
  double xi1 = 0.0;
  double xi2 = 0.0;
};

enum class Branch { minus, plus };

/// (lambda_-, lambda_+) roots of lambda^2 - c lambda + xi1^2, c the velocity
/// damping symbol (c = 1 for the damped system). Principal square root.
struct EigenPair {
  Complex minus;
  Complex plus;
};

/// s = sqrt(c^2 - 4 xi1^2), principal branch.
Complex discriminant(double xi1, double damping = 1.0);
/// Throws ContractViolation for non-finite xi1.
EigenPair eigenvalues(double xi1, double damping = 1.0);

/// The 4x4 linear operator acting on (v1, v2, B1, B2)^.
Mat4 linear_operator(double xi1);

/// <u, w> = sum_i u_i conj(w_i)
Complex inner(const Vec4& u, const Vec4& w);

/// Eigen-system of the linear operator at a fixed xi1: J conj(a) = lambda conj(a)
/// for the four pairs, and reconstruction u = sum <u, a> b. The b vectors carry
/// the factor 1/(xi1 s) and do not exist at xi1 in {0, +-1/2}.
class ModeSystem {
 public:
  double xi1() const noexcept { return xi1_; }
  Complex s() const noexcept { return s_; }
  Complex lambda(Branch br) const noexcept { return br == Branch::plus ? plus_ : minus_; }
  Complex lambda_minus() const noexcept { return minus_; }
  Complex lambda_plus() const noexcept { return plus_; }

  /// a_{+-}^j, j in {1, 2}
  const Vec4& a(Branch br, int j) const;
  /// b_{+-}^j; throws SingularBasisError where the basis is singular.
  const Vec4& b(Branch br, int j) const;
  bool has_reconstruction_basis() const noexcept { return b_.has_value(); }

 private:
  friend ModeSystem mode_system(double xi1);
  static std::size_t slot(Branch br, int j);

  double xi1_ = 0.0;
  Complex s_;
  Complex minus_;
  Complex plus_;
  std::array<Vec4, 4> a_{};
  std::optional<std::array<Vec4, 4>> b_;
};

ModeSystem mode_system(double xi1);

/// D(t) = (e^{-lambda_- t} - e^{-lambda_+ t}) / (lambda_+ - lambda_-), with the
/// confluent value t e^{-c t/2} at s = 0. Evaluated as t e^{-ct/2} sinhc(st/2):
/// series below |st/2| < 1e-4, expm1 form for real s, sinc form for imaginary s.
Complex divided_difference(double xi1, double t, double damping = 1.0);

enum class Row { e2, e4 };

struct Decomposition {
  Complex resonant;  // (e^{-lambda_- t} - e^{-lambda_+ t}) <f, a_-^2> <b_-^2, row>
  Complex damped;    // e^{-lambda_+ t} <f, row>
  Complex total() const { return resonant + damped; }
};

/// Finite at every xi1, including the degenerate lines.
Decomposition anisotropic_decompose(const Vec4& f, double xi1, double t, Row row);

enum class Region { omega1, omega2, omega3 };

/// Omega1: |xi1| >= 1/2, Omega2: 1/4 <= |xi1| < 1/2, Omega3: |xi1| < 1/4.
Region classify_region(double xi1);
inline Region classify_region(Wavenumber xi) { return classify_region(xi.xi1); }
const char* region_name(Region r);

struct BoundSample {
  std::string id;  // "Omg_1", "Omg_2", "Omg_3", "Omg_4"
  double lhs = 0.0;
  double rhs = 0.0;  // right-hand side with C = 1
  double ratio() const;
};

/// Resonant-part bounds selected by the region of xi.
std::vector<BoundSample> lemma_bounds_audit(const Vec4& f, Wavenumber xi, double t);

struct LemmaScanConfig {
  double xi_min = -4.0;
  double xi_max = 4.0;
  double xi_step = 1e-3;
  std::vector<double> times{0.0, 0.1, 1.0, 10.0, 100.0};
  int samples = 20;
  std::uint64_t seed = 1;
};

struct LemmaScanRow {
  std::string id;
  double xi1 = 0.0;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  int sample = 0;
};

struct LemmaScanResult {
  std::vector<LemmaScanRow> rows;
  // worst row per inequality id, in the order Omg_1, Omg_2, Omg_4, Omg_3
  std::vector<LemmaScanRow> worst;
  std::vector<Vec4> samples;  // the f vectors, indexed by LemmaScanRow::sample
};

LemmaScanResult lemma_scan(const LemmaScanConfig& cfg, bool keep_rows = true);

}  // namespace mhd
