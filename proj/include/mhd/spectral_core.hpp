#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mhd {

using Complex = std::complex<double>;
using Field = std::vector<Complex>;
using PhysicalField = std::vector<double>;

/// Periodic box [0,l1) x [0,l2) resolved by n1 x n2 Fourier modes.
///
/// Coefficients are stored row-major, index (i1, i2) -> i1 * n2 + i2, with
/// FFT ordering: integer wavenumber k(i) = i for i < n/2 and i - n otherwise,
/// so k ranges over [-n/2, n/2) and the Nyquist index n/2 maps to -n/2.
/// Physical wavenumbers are xi = (2 pi / l) k.
///
/// Normalization: the forward transform carries 1/(n1 n2), i.e.
///   f(x) = sum_k c_k exp(i xi_k . x),
/// so the L2 norm over the box is ||f||^2 = l1 l2 sum_k |c_k|^2. The factor
/// l1 l2 is l2_weight(). Under the unitary continuous transform the same
/// coefficients correspond to the spectral density f^(xi_k) = l1 l2 / (2 pi) c_k
/// on cells of area (2 pi)^2 / (l1 l2); see density_scale() and cell_area().
class SpectralGrid {
 public:
  SpectralGrid() = default;

  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }
  double l1() const noexcept { return l1_; }
  double l2() const noexcept { return l2_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n1_) * static_cast<std::size_t>(n2_);
  }
  std::size_t index(int i1, int i2) const noexcept {
    return static_cast<std::size_t>(i1) * static_cast<std::size_t>(n2_) +
           static_cast<std::size_t>(i2);
  }

  int k1(int i1) const noexcept { return i1 < n1_ / 2 ? i1 : i1 - n1_; }
  int k2(int i2) const noexcept { return i2 < n2_ / 2 ? i2 : i2 - n2_; }
  double dk1() const noexcept { return dk1_; }
  double dk2() const noexcept { return dk2_; }
  double xi1(int i1) const noexcept { return xi1_[static_cast<std::size_t>(i1)]; }
  double xi2(int i2) const noexcept { return xi2_[static_cast<std::size_t>(i2)]; }
  std::span<const double> xi1_values() const noexcept { return xi1_; }
  std::span<const double> xi2_values() const noexcept { return xi2_; }

  double dx1() const noexcept { return l1_ / n1_; }
  double dx2() const noexcept { return l2_ / n2_; }
  double physical_cell_area() const noexcept { return dx1() * dx2(); }

  // ||f||_{L2}^2 = l2_weight() * sum |c_k|^2
  double l2_weight() const noexcept { return l1_ * l2_; }
  // unitary spectral density per coefficient and spectral cell size
  double density_scale() const noexcept;
  double cell_area() const noexcept { return dk1_ * dk2_; }

  bool is_nyquist(int i1, int i2) const noexcept {
    return i1 == n1_ / 2 || i2 == n2_ / 2;
  }
  // 2/3-rule: retained iff |k_i| <= n_i / 3 on both axes
  bool is_retained(int i1, int i2) const noexcept;

  // index of the mode carrying wavenumber -k
  std::size_t mirror_index(int i1, int i2) const noexcept {
    return index(i1 == 0 ? 0 : n1_ - i1, i2 == 0 ? 0 : n2_ - i2);
  }

  friend bool operator==(const SpectralGrid& a, const SpectralGrid& b) noexcept {
    return a.n1_ == b.n1_ && a.n2_ == b.n2_ && a.l1_ == b.l1_ && a.l2_ == b.l2_;
  }

 private:
  friend SpectralGrid make_grid(int n1, int n2, double l1, double l2);

  int n1_ = 0;
  int n2_ = 0;
  double l1_ = 0.0;
  double l2_ = 0.0;
  double dk1_ = 0.0;
  double dk2_ = 0.0;
  std::vector<double> xi1_;
  std::vector<double> xi2_;
};

/// Throws ConfigError unless n1, n2 are even and >= 8 and l1, l2 > 0.
SpectralGrid make_grid(int n1, int n2, double l1, double l2);

enum class Component : int { v1 = 0, v2 = 1, B1 = 2, B2 = 3 };

/// Perturbation (v, B) in Fourier space, components ordered (v1, v2, B1, B2).
struct SpectralState {
  SpectralGrid grid;
  std::array<Field, 4> coeffs;
  double time = 0.0;

  static SpectralState zeros(const SpectralGrid& grid, double time = 0.0);

  Field& operator[](Component c) { return coeffs[static_cast<std::size_t>(c)]; }
  const Field& operator[](Component c) const {
    return coeffs[static_cast<std::size_t>(c)];
  }
};

// -- transforms -------------------------------------------------------------

PhysicalField to_physical(const SpectralGrid& grid, std::span<const Complex> coeffs);
Field to_spectral(const SpectralGrid& grid, std::span<const double> values);

/// Inverse then forward transform of every component.
SpectralState transform_roundtrip(const SpectralState& state);

// -- spectral operators -----------------------------------------------------

/// Orthogonal projection of (v1, v2) and of (B1, B2) onto xi . w = 0.
/// The xi = 0 mode is left untouched.
SpectralState leray_project(const SpectralState& state);
void leray_project_pair(const SpectralGrid& grid, Field& w1, Field& w2);

/// Multiplies every component by (i xi_axis)^order; axis is 1 or 2.
/// Odd orders zero the Nyquist line of that axis.
SpectralState spectral_derivative(const SpectralState& state, int axis, int order);
Field derivative(const SpectralGrid& grid, std::span<const Complex> f, int axis,
                 int order);

/// Zeroes modes with |k_i| > n_i/3 (this includes the Nyquist lines).
SpectralState dealias(const SpectralState& state);
void dealias_in_place(const SpectralGrid& grid, Field& f);

void zero_mean(SpectralState& state);

// -- norms ------------------------------------------------------------------

/// (l1 l2 sum (1+|xi|^2)^m |c|^2)^{1/2}; throws ContractViolation for m < 0.
double sobolev_norm(const SpectralGrid& grid, std::span<const Complex> f, double m);
double l2_norm(const SpectralGrid& grid, std::span<const Complex> f);

/// max_k |xi . w_k| / (sum_k |w_k|^2)^{1/2}, maximized over the v and B pairs.
double divergence_residual(const SpectralState& state);
/// max_k |c_{-k} - conj(c_k)| over all components.
double hermitian_residual(const SpectralState& state);

// -- snapshots --------------------------------------------------------------

/// Little-endian layout: "MHD2", u32 version, then n1, n2, l1, l2, time as
/// IEEE-754 doubles, then the four row-major complex arrays (v1, v2, B1, B2)
/// as interleaved (re, im) doubles.
inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(std::ostream& out, const SpectralState& state);
SpectralState read_snapshot(std::istream& in);
void write_snapshot(const std::filesystem::path& path, const SpectralState& state);
SpectralState read_snapshot(const std::filesystem::path& path);

}  // namespace mhd
