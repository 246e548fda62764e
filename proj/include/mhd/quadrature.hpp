#pragma once

#include <span>
#include <vector>

namespace mhd {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
const QuadratureRule& gauss_legendre(int n);

/// Composite rule: the given rule mapped onto each [edges[i], edges[i+1]].
QuadratureRule composite(const QuadratureRule& base, std::span<const double> edges);

/// Panel edges on [-a, a]: dyadic shells a 2^{-i} on both sides of 0 down to
/// a 2^{-depth}, each shell split into `split` equal panels.
std::vector<double> dyadic_edges(double a, int depth, int split);
std::vector<double> uniform_edges(double lo, double hi, int panels);

}  // namespace mhd
