#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "mhd/spectral_core.hpp"

namespace test {

using mhd::Complex;

// Real, zero-mean, dealiased random field built in physical space so that
// Hermitian symmetry comes for free.
inline mhd::Field random_field(const mhd::SpectralGrid& g, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  mhd::PhysicalField x(g.size());
  for (auto& v : x) v = n(rng);
  mhd::Field f = mhd::to_spectral(g, x);
  mhd::dealias_in_place(g, f);
  f[0] = 0.0;
  return f;
}

// Divergence-free (v, B) from two random stream functions: w = (d2 psi, -d1 psi).
inline mhd::SpectralState random_state(const mhd::SpectralGrid& g, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  mhd::SpectralState s = mhd::SpectralState::zeros(g);
  for (int pair = 0; pair < 2; ++pair) {
    const mhd::Field psi = random_field(g, rng, scale);
    for (int i1 = 0; i1 < g.n1(); ++i1)
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        const std::size_t k = g.index(i1, i2);
        s.coeffs[2 * pair][k] = Complex(0, g.xi2(i2)) * psi[k];
        s.coeffs[2 * pair + 1][k] = -Complex(0, g.xi1(i1)) * psi[k];
      }
  }
  return s;
}

inline double max_diff(const mhd::SpectralState& a, const mhd::SpectralState& b) {
  double d = 0.0;
  for (int c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < a.coeffs[c].size(); ++k)
      d = std::max(d, std::abs(a.coeffs[c][k] - b.coeffs[c][k]));
  return d;
}

inline double max_abs(const mhd::SpectralState& a) {
  double d = 0.0;
  for (const auto& f : a.coeffs)
    for (const auto& z : f) d = std::max(d, std::abs(z));
  return d;
}

}  // namespace test
