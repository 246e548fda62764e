#include "mhd/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "mhd/errors.hpp"

namespace mhd {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = -x;
    r.nodes[hi] = x;
    r.weights[lo] = w;
    r.weights[hi] = w;
  }
  return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 2) throw ContractViolation("Gauss-Legendre rule needs n >= 2");
  static std::mutex m;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

QuadratureRule composite(const QuadratureRule& base, std::span<const double> edges) {
  QuadratureRule r;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      r.nodes.push_back(mid + half * base.nodes[i]);
      r.weights.push_back(half * base.weights[i]);
    }
  }
  return r;
}

std::vector<double> dyadic_edges(double a, int depth, int split) {
  std::vector<double> pos{0.0};
  const double innermost = a * std::ldexp(1.0, -depth);
  for (int s = 1; s <= split; ++s) pos.push_back(innermost * s / split);
  for (int i = depth; i >= 1; --i) {
    const double lo = a * std::ldexp(1.0, -i);
    for (int s = 1; s <= split; ++s) pos.push_back(lo + lo * s / split);
  }
  std::vector<double> edges;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it)
    if (*it > 0.0) edges.push_back(-*it);
  edges.insert(edges.end(), pos.begin(), pos.end());
  return edges;
}

std::vector<double> uniform_edges(double lo, double hi, int panels) {
  std::vector<double> e(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i)
    e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / panels;
  return e;
}

}  // namespace mhd
