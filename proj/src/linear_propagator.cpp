#include "mhd/linear_propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhd/errors.hpp"
#include "mhd/quadrature.hpp"

namespace mhd {

namespace {

constexpr Complex kI{0.0, 1.0};

// |delta| below which phi divided differences use the Taylor form
constexpr double kConfluentSwitch = 1e-3;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

Mat2 scaled_sum(Complex a, Complex b, const Mat2& m) {
  // a I + b m
  return {a + b * m.m00, b * m.m01, b * m.m10, a + b * m.m11};
}

// sum_j c_j phi_j(z), the coefficient vector indexed from 0
Complex phi_combination(const std::vector<double>& c, Complex z) {
  Complex s{};
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] != 0.0) s += c[j] * phi(static_cast<int>(j), z);
  return s;
}

// n-th derivative of phi_k as a combination of phi_k..phi_{k+n}, using
// phi_j' = phi_j - j phi_{j+1}
std::vector<double> phi_derivative(int k, int n) {
  std::vector<double> c(static_cast<std::size_t>(k + n + 1), 0.0);
  c[static_cast<std::size_t>(k)] = 1.0;
  for (int d = 0; d < n; ++d) {
    std::vector<double> next(c.size(), 0.0);
    for (std::size_t j = 0; j + 1 < c.size(); ++j) {
      next[j] += c[j];
      next[j + 1] -= c[j] * static_cast<double>(j);
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace

double max_abs_diff(const Mat2& a, const Mat2& b) {
  return std::max({std::abs(a.m00 - b.m00), std::abs(a.m01 - b.m01),
                   std::abs(a.m10 - b.m10), std::abs(a.m11 - b.m11)});
}

double operator_norm(const Mat2& a) {
  // largest singular value from the 2x2 Gram matrix
  const double p = std::norm(a.m00) + std::norm(a.m10);
  const double q = std::norm(a.m01) + std::norm(a.m11);
  const Complex r = std::conj(a.m00) * a.m01 + std::conj(a.m10) * a.m11;
  const double half = 0.5 * (p + q);
  const double disc = std::sqrt(0.25 * (p - q) * (p - q) + std::norm(r));
  return std::sqrt(half + disc);
}

Mat2 generator_block(double xi1, double damping) {
  return {damping, kI * xi1, kI * xi1, 0.0};
}

PropagatorBlock propagator_block(double xi1, double t, double damping) {
  if (!(t >= 0.0)) throw ContractViolation("propagator_block: t must be >= 0");
  PropagatorBlock pb;
  pb.xi1 = xi1;
  pb.t = t;
  if (t == 0.0) return pb;
  const EigenPair ev = eigenvalues(xi1, damping);
  const Complex d = divided_difference(xi1, t, damping);
  // lambda_+ I - K
  const Mat2 shift{ev.plus - damping, -kI * xi1, -kI * xi1, ev.plus};
  pb.entries = scaled_sum(std::exp(-ev.plus * t), d, shift);
  return pb;
}

Complex phi(int k, Complex z) {
  if (k < 0) throw ContractViolation("phi: k must be >= 0");
  if (k == 0) return std::exp(z);
  Complex p1;
  const Complex w = 0.5 * z;
  if (std::abs(w) < 1e-4) {
    const Complex w2 = w * w;
    p1 = std::exp(w) * (1.0 + w2 / 6.0 * (1.0 + w2 / 20.0));
  } else {
    p1 = std::exp(w) * std::sinh(w) / w;
  }
  if (k == 1) return p1;
  if (std::abs(z) < 8.0) {
    Complex sum{}, term = 1.0 / factorial(k);
    for (int n = 0; n < 200; ++n) {
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      term *= z / static_cast<double>(n + k + 1);
    }
    return sum;
  }
  Complex pj = p1;
  for (int j = 1; j < k; ++j) pj = (pj - 1.0 / factorial(j)) / z;
  return pj;
}

Mat2 phi_block(int k, double xi1, double dt, double damping) {
  if (!(dt > 0.0)) throw ContractViolation("phi_block: dt must be > 0");
  if (k == 0) return propagator_block(xi1, dt, damping).entries;
  const EigenPair ev = eigenvalues(xi1, damping);
  const Complex zp = -dt * ev.plus;
  const Complex zm = -dt * ev.minus;
  const Complex zc = 0.5 * (zp + zm);
  const Complex delta = 0.5 * (zp - zm);
  Complex dd;
  if (std::abs(delta) < kConfluentSwitch) {
    const Complex d2 = delta * delta;
    dd = phi_combination(phi_derivative(k, 1), zc) +
         phi_combination(phi_derivative(k, 3), zc) * d2 / 6.0 +
         phi_combination(phi_derivative(k, 5), zc) * d2 * d2 / 120.0;
  } else {
    dd = (phi(k, zp) - phi(k, zm)) / (zp - zm);
  }
  // Z - z_+ I = dt (lambda_+ I - K)
  const Mat2 shift{dt * (ev.plus - damping), -dt * kI * xi1, -dt * kI * xi1,
                   dt * ev.plus};
  return scaled_sum(phi(k, zp), dd, shift);
}

double DampingModel::symbol(double xi1, double xi2) const {
  if (alpha == 0.0) return kappa;
  const double r2 = xi1 * xi1 + xi2 * xi2;
  return r2 == 0.0 ? 0.0 : kappa * std::pow(r2, alpha);
}

SpectralState apply_semigroup(const SpectralState& state, double t,
                              const DampingModel& damping) {
  if (!(t >= 0.0)) throw ContractViolation("apply_semigroup: t must be >= 0");
  SpectralState out = state;
  out.time = state.time + t;
  if (t == 0.0) return out;
  const auto& g = state.grid;
  for (int i1 = 0; i1 < g.n1(); ++i1) {
    const double x1 = g.xi1(i1);
    Mat2 row_block = propagator_block(-x1, t, damping.kappa).entries;
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const Mat2 blk = damping.alpha == 0.0
                           ? row_block
                           : propagator_block(-x1, t, damping.symbol(x1, g.xi2(i2))).entries;
      const std::size_t idx = g.index(i1, i2);
      for (int j = 0; j < 2; ++j) {
        auto& v = out.coeffs[static_cast<std::size_t>(j)][idx];
        auto& b = out.coeffs[static_cast<std::size_t>(j + 2)][idx];
        const auto r = blk.apply(v, b);
        v = r[0];
        b = r[1];
      }
    }
  }
  return out;
}

// -- profiles ---------------------------------------------------------------

double cutoff_sigma(double r) {
  const double a = std::abs(r);
  if (a >= 0.25) return 0.0;
  const double q = 16.0 * a * a;
  return std::exp(1.0 - 1.0 / (1.0 - q));
}

const char* profile_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::fstar: return "fstar";
    case ProfileKind::prop25: return "prop25";
    default: return "custom";
  }
}

ProfileData build_profile(ProfileKind kind, const ProfileParams& params) {
  ProfileData p;
  p.kind = kind;
  switch (kind) {
    case ProfileKind::prop25:
      p.eval = [](double x1, double x2) -> Vec4 {
        const double w = cutoff_sigma(x1) * cutoff_sigma(x2);
        if (w == 0.0) return {};
        return {w * x2, -w * x1, w * x2, -w * x1};
      };
      break;
    case ProfileKind::fstar: {
      auto phi_fn = params.phi ? params.phi : [](double) { return Complex{1.0, 0.0}; };
      auto varphi_fn = params.varphi ? params.varphi : [](double x2) {
        return Complex{std::exp(-x2 * x2) * cutoff_sigma(x2), 0.0};
      };
      if (std::abs(phi_fn(0.0)) == 0.0)
        throw ContractViolation("fstar profile needs phi(0) != 0");
      p.scalar = true;
      p.eval = [phi_fn, varphi_fn](double x1, double x2) -> Vec4 {
        const double s = cutoff_sigma(x1);
        if (s == 0.0) return {};
        return {phi_fn(x1) * s * varphi_fn(x2), 0.0, 0.0, 0.0};
      };
      break;
    }
    case ProfileKind::custom:
      if (!params.custom) throw ContractViolation("custom profile needs an evaluator");
      if (!(params.support1 > 0.0) || !(params.support2 > 0.0))
        throw ContractViolation("custom profile needs positive support");
      p.eval = params.custom;
      p.scalar = params.scalar;
      p.support1 = params.support1;
      p.support2 = params.support2;
      break;
  }
  return p;
}

// -- decay curves -----------------------------------------------------------

std::string weight_label(const DecayWeight& w) {
  if (const auto* c = std::get_if<ComponentWeight>(&w)) {
    static const char* kNames[] = {"v1", "v2", "B1", "B2"};
    return kNames[static_cast<int>(c->component)];
  }
  return "xi1^" + std::to_string(std::get<XiPowerWeight>(w).j);
}

std::vector<double> log_spaced_times(double t_lo, double t_hi, int n) {
  if (!(t_lo > 0.0) || !(t_hi > t_lo) || n < 2)
    throw ContractViolation("log_spaced_times: need 0 < t_lo < t_hi and n >= 2");
  std::vector<double> t(static_cast<std::size_t>(n));
  // powers of ten so whole decades land exactly
  const double a = std::log10(t_lo), b = std::log10(t_hi);
  for (int i = 0; i < n; ++i)
    t[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
  t.front() = t_lo;
  t.back() = t_hi;
  return t;
}

namespace {

// xi2-integrated second moments of the profile at one xi1 node
struct NodeMoments {
  double xi1 = 0.0;
  double weight = 0.0;
  // G_j[a][b] = int p_a conj(p_b) dxi2 with p = (f_j, f_{j+2})
  std::array<std::array<std::array<Complex, 2>, 2>, 2> gram{};
  double total = 0.0;  // int |f|^2 dxi2
};

std::vector<NodeMoments> moments(const ProfileData& profile, const QuadratureRule& r1,
                                 const QuadratureRule& r2) {
  std::vector<NodeMoments> out(r1.nodes.size());
  for (std::size_t a = 0; a < r1.nodes.size(); ++a) {
    NodeMoments& m = out[a];
    m.xi1 = r1.nodes[a];
    m.weight = r1.weights[a];
    for (std::size_t b = 0; b < r2.nodes.size(); ++b) {
      const Vec4 f = profile(m.xi1, r2.nodes[b]);
      const double w = r2.weights[b];
      for (int j = 0; j < 2; ++j) {
        const Complex p[2] = {f[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j + 2)]};
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) m.gram[j][x][y] += w * p[x] * std::conj(p[y]);
      }
      for (const auto& z : f) m.total += w * std::norm(z);
    }
  }
  return out;
}

std::vector<double> evaluate(const std::vector<NodeMoments>& nodes, const DecayWeight& weight,
                             std::span<const double> times) {
  std::vector<double> values(times.size());
  const auto* comp = std::get_if<ComponentWeight>(&weight);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    double sum = 0.0;
    for (const auto& n : nodes) {
      if (n.total == 0.0) continue;
      if (comp) {
        const int c = static_cast<int>(comp->component);
        const int j = c % 2;
        const int row = c / 2;
        const Mat2 blk = propagator_block(n.xi1, t).entries;
        const Complex beta[2] = {row == 0 ? blk.m00 : blk.m10, row == 0 ? blk.m01 : blk.m11};
        Complex q{};
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y) q += beta[x] * std::conj(beta[y]) * n.gram[j][x][y];
        sum += n.weight * q.real();
      } else {
        const int p = std::get<XiPowerWeight>(weight).j;
        const double lm = eigenvalues(n.xi1).minus.real();
        const double xp = p == 0 ? 1.0 : std::pow(std::abs(n.xi1), 2 * p);
        sum += n.weight * xp * std::exp(-2.0 * lm * t) * n.total;
      }
    }
    values[k] = std::sqrt(std::max(sum, 0.0));
  }
  return values;
}

}  // namespace

DecayCurve linear_decay_curve(const ProfileData& profile, const DecayWeight& weight,
                              std::span<const double> times, const QuadratureOptions& opts) {
  if (!profile.eval) throw ContractViolation("linear_decay_curve: empty profile");
  if (times.empty()) throw ContractViolation("linear_decay_curve: no times");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || !std::isfinite(times[k]))
      throw ContractViolation("linear_decay_curve: times must be finite and >= 0");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw ContractViolation("linear_decay_curve: times must be strictly increasing");
  }
  if (const auto* c = std::get_if<ComponentWeight>(&weight); c && profile.scalar)
    throw ContractViolation("component weights need a four-component profile");
  if (const auto* x = std::get_if<XiPowerWeight>(&weight); x && x->j < 0)
    throw ContractViolation("xi1 power must be >= 0");

  const QuadratureRule& base = gauss_legendre(opts.nodes);
  std::vector<double> prev;
  double last_diff = 0.0;
  for (int level = 0; level <= opts.max_refinements; ++level) {
    const auto e1 = dyadic_edges(profile.support1, opts.base_depth + 8 * level, 1 << level);
    const auto e2 = uniform_edges(-profile.support2, profile.support2, 2 << level);
    const auto nodes = moments(profile, composite(base, e1), composite(base, e2));
    auto values = evaluate(nodes, weight, times);
    if (!prev.empty()) {
      last_diff = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        const double scale = std::max(std::abs(values[k]), 1e-300);
        last_diff = std::max(last_diff, std::abs(values[k] - prev[k]) / scale);
      }
      if (last_diff <= opts.rel_tol) {
        DecayCurve curve;
        curve.times.assign(times.begin(), times.end());
        curve.values = std::move(values);
        curve.label = weight_label(weight);
        return curve;
      }
    }
    prev = std::move(values);
  }
  std::ostringstream msg;
  msg << "decay quadrature did not converge after " << opts.max_refinements
      << " refinements (last relative change " << last_diff << ")";
  throw NumericalAccuracyError(msg.str());
}

}  // namespace mhd
