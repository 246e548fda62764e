#include "mhd/spectral_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "mhd/errors.hpp"
#include "mhd/fft.hpp"

namespace mhd {

double SpectralGrid::density_scale() const noexcept {
  return l1_ * l2_ / (2.0 * std::numbers::pi);
}

bool SpectralGrid::is_retained(int i1, int i2) const noexcept {
  return 3 * std::abs(k1(i1)) <= n1_ && 3 * std::abs(k2(i2)) <= n2_;
}

SpectralGrid make_grid(int n1, int n2, double l1, double l2) {
  auto check_n = [](int n, const char* name) {
    if (n < 8 || n % 2 != 0)
      throw ConfigError(std::string(name) + " must be even and >= 8, got " +
                        std::to_string(n));
  };
  check_n(n1, "n1");
  check_n(n2, "n2");
  if (!(l1 > 0.0) || !std::isfinite(l1)) throw ConfigError("l1 must be positive");
  if (!(l2 > 0.0) || !std::isfinite(l2)) throw ConfigError("l2 must be positive");

  SpectralGrid g;
  g.n1_ = n1;
  g.n2_ = n2;
  g.l1_ = l1;
  g.l2_ = l2;
  g.dk1_ = 2.0 * std::numbers::pi / l1;
  g.dk2_ = 2.0 * std::numbers::pi / l2;
  g.xi1_.resize(static_cast<std::size_t>(n1));
  g.xi2_.resize(static_cast<std::size_t>(n2));
  for (int i = 0; i < n1; ++i) g.xi1_[static_cast<std::size_t>(i)] = g.dk1_ * g.k1(i);
  for (int i = 0; i < n2; ++i) g.xi2_[static_cast<std::size_t>(i)] = g.dk2_ * g.k2(i);
  return g;
}

SpectralState SpectralState::zeros(const SpectralGrid& grid, double time) {
  SpectralState s;
  s.grid = grid;
  for (auto& c : s.coeffs) c.assign(grid.size(), Complex{});
  s.time = time;
  return s;
}

PhysicalField to_physical(const SpectralGrid& grid, std::span<const Complex> coeffs) {
  PhysicalField out(grid.size());
  fft_plan_for(grid.n1(), grid.n2()).inverse(coeffs, out);
  return out;
}

Field to_spectral(const SpectralGrid& grid, std::span<const double> values) {
  Field out(grid.size());
  fft_plan_for(grid.n1(), grid.n2()).forward(values, out);
  return out;
}

SpectralState transform_roundtrip(const SpectralState& state) {
  SpectralState out = state;
  for (std::size_t c = 0; c < 4; ++c)
    out.coeffs[c] = to_spectral(state.grid, to_physical(state.grid, state.coeffs[c]));
  return out;
}

void leray_project_pair(const SpectralGrid& grid, Field& w1, Field& w2) {
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    const double a = grid.xi1(i1);
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const double b = grid.xi2(i2);
      const double k2 = a * a + b * b;
      if (k2 == 0.0) continue;
      const std::size_t idx = grid.index(i1, i2);
      const Complex div = (a * w1[idx] + b * w2[idx]) / k2;
      w1[idx] -= a * div;
      w2[idx] -= b * div;
    }
  }
}

SpectralState leray_project(const SpectralState& state) {
  SpectralState out = state;
  leray_project_pair(out.grid, out[Component::v1], out[Component::v2]);
  leray_project_pair(out.grid, out[Component::B1], out[Component::B2]);
  return out;
}

namespace {

Complex i_pow(int order) {
  switch (order % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

Field derivative(const SpectralGrid& grid, std::span<const Complex> f, int axis,
                 int order) {
  if (axis != 1 && axis != 2) throw ContractViolation("axis must be 1 or 2");
  if (order < 0) throw ContractViolation("derivative order must be >= 0");
  Field out(f.begin(), f.end());
  if (order == 0) return out;
  const Complex phase = i_pow(order);
  const bool odd = order % 2 != 0;
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const std::size_t idx = grid.index(i1, i2);
      const bool nyquist = axis == 1 ? i1 == grid.n1() / 2 : i2 == grid.n2() / 2;
      if (odd && nyquist) {
        out[idx] = 0.0;
        continue;
      }
      const double xi = axis == 1 ? grid.xi1(i1) : grid.xi2(i2);
      out[idx] *= phase * std::pow(xi, order);
    }
  }
  return out;
}

SpectralState spectral_derivative(const SpectralState& state, int axis, int order) {
  SpectralState out = state;
  for (std::size_t c = 0; c < 4; ++c)
    out.coeffs[c] = derivative(state.grid, state.coeffs[c], axis, order);
  return out;
}

void dealias_in_place(const SpectralGrid& grid, Field& f) {
  for (int i1 = 0; i1 < grid.n1(); ++i1)
    for (int i2 = 0; i2 < grid.n2(); ++i2)
      if (!grid.is_retained(i1, i2)) f[grid.index(i1, i2)] = 0.0;
}

SpectralState dealias(const SpectralState& state) {
  SpectralState out = state;
  for (auto& c : out.coeffs) dealias_in_place(out.grid, c);
  return out;
}

void zero_mean(SpectralState& state) {
  for (auto& c : state.coeffs) c[0] = 0.0;
}

double sobolev_norm(const SpectralGrid& grid, std::span<const Complex> f, double m) {
  if (!(m >= 0.0)) throw ContractViolation("Sobolev order must be >= 0");
  double sum = 0.0;
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    const double a = grid.xi1(i1);
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const double b = grid.xi2(i2);
      const double w = m == 0.0 ? 1.0 : std::pow(1.0 + a * a + b * b, m);
      sum += w * std::norm(f[grid.index(i1, i2)]);
    }
  }
  return std::sqrt(grid.l2_weight() * sum);
}

double l2_norm(const SpectralGrid& grid, std::span<const Complex> f) {
  return sobolev_norm(grid, f, 0.0);
}

double divergence_residual(const SpectralState& state) {
  const auto& g = state.grid;
  auto pair_residual = [&](const Field& w1, const Field& w2) {
    double norm2 = 0.0;
    double worst = 0.0;
    for (int i1 = 0; i1 < g.n1(); ++i1) {
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        const std::size_t idx = g.index(i1, i2);
        norm2 += std::norm(w1[idx]) + std::norm(w2[idx]);
        worst = std::max(worst, std::abs(g.xi1(i1) * w1[idx] + g.xi2(i2) * w2[idx]));
      }
    }
    return norm2 > 0.0 ? worst / std::sqrt(norm2) : 0.0;
  };
  return std::max(pair_residual(state[Component::v1], state[Component::v2]),
                  pair_residual(state[Component::B1], state[Component::B2]));
}

double hermitian_residual(const SpectralState& state) {
  const auto& g = state.grid;
  double worst = 0.0;
  for (const auto& c : state.coeffs)
    for (int i1 = 0; i1 < g.n1(); ++i1)
      for (int i2 = 0; i2 < g.n2(); ++i2)
        worst = std::max(worst, std::abs(c[g.mirror_index(i1, i2)] -
                                         std::conj(c[g.index(i1, i2)])));
  return worst;
}

// -- snapshots --------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'H', 'D', '2'};

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw SnapshotFormatError("snapshot truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const SpectralState& state) {
  const auto& g = state.grid;
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<double>(out, g.n1());
  put_le<double>(out, g.n2());
  put_le<double>(out, g.l1());
  put_le<double>(out, g.l2());
  put_le<double>(out, state.time);
  for (const auto& c : state.coeffs) {
    for (const Complex& z : c) {
      put_le<double>(out, z.real());
      put_le<double>(out, z.imag());
    }
  }
  if (!out) throw SnapshotFormatError("snapshot write failed");
}

SpectralState read_snapshot(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic))
    throw SnapshotFormatError("bad snapshot magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion)
    throw SnapshotFormatError("unsupported snapshot version " + std::to_string(version));
  const double n1 = get_le<double>(in);
  const double n2 = get_le<double>(in);
  const double l1 = get_le<double>(in);
  const double l2 = get_le<double>(in);
  const double time = get_le<double>(in);
  if (n1 != std::floor(n1) || n2 != std::floor(n2) || n1 > 1 << 20 || n2 > 1 << 20)
    throw SnapshotFormatError("snapshot grid size is not an integer");
  SpectralGrid grid;
  try {
    grid = make_grid(static_cast<int>(n1), static_cast<int>(n2), l1, l2);
  } catch (const ConfigError& e) {
    throw SnapshotFormatError(std::string("snapshot header: ") + e.what());
  }
  SpectralState state = SpectralState::zeros(grid, time);
  for (auto& c : state.coeffs) {
    for (Complex& z : c) {
      const double re = get_le<double>(in);
      const double im = get_le<double>(in);
      z = {re, im};
    }
  }
  return state;
}

void write_snapshot(const std::filesystem::path& path, const SpectralState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotFormatError("cannot open " + path.string());
  write_snapshot(out, state);
}

SpectralState read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotFormatError("cannot open " + path.string());
  return read_snapshot(in);
}

}  // namespace mhd
