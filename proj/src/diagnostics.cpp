#include "mhd/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "mhd/errors.hpp"
#include "mhd/normal_modes.hpp"
#include "mhd/quadrature.hpp"

namespace mhd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double max_abs(const PhysicalField& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

double trapezoid(std::span<const double> t, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

// (int f^p dt)^{1/p}
double lp_time(std::span<const double> t, std::span<const double> f, double p) {
  std::vector<double> fp(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) fp[i] = std::pow(f[i], p);
  return std::pow(trapezoid(t, fp), 1.0 / p);
}

}  // namespace

double multi_index_weight(double xi1, double xi2, int m) {
  const double a = xi1 * xi1, b = xi2 * xi2;
  double total = 0.0;
  for (int k = 0; k <= m; ++k) {
    // sum_{j=0}^{k} a^j b^{k-j}
    double s = 0.0, aj = 1.0;
    for (int j = 0; j <= k; ++j) {
      s += aj * ipow(b, k - j);
      aj *= a;
    }
    total += s;
  }
  return total;
}

double fourier_l1(const SpectralGrid& grid, std::span<const double> magnitudes) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += magnitudes[i];
  return kTwoPi * s;
}

double fourier_l2l1(const SpectralGrid& grid, std::span<const double> magnitudes) {
  double s = 0.0;
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    double col = 0.0;
    for (int i2 = 0; i2 < grid.n2(); ++i2) col += magnitudes[grid.index(i1, i2)];
    s += col * col;
  }
  return std::sqrt(kTwoPi * grid.l1() * s);
}

double xm_norm(const SpectralState& state, int m) {
  const auto& g = state.grid;
  double hm2 = 0.0;
  for (const auto& c : state.coeffs) {
    const double h = sobolev_norm(g, c, m);
    hm2 += h * h;
  }
  std::vector<double> w_all(g.size(), 0.0), w_b_xi(g.size(), 0.0), w_b_x1(g.size(), 0.0);
  for (int i1 = 0; i1 < g.n1(); ++i1) {
    const double a = g.xi1(i1);
    if (a == 0.0) continue;
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const double b = g.xi2(i2);
      const std::size_t idx = g.index(i1, i2);
      double all = 0.0;
      for (const auto& c : state.coeffs) all += std::norm(c[idx]);
      const double mag_b = std::hypot(std::abs(state.coeffs[2][idx]), std::abs(state.coeffs[3][idx]));
      const double r = std::hypot(a, b);
      w_all[idx] = std::sqrt(std::abs(a)) / r * std::sqrt(all);
      w_b_xi[idx] = mag_b / r;
      w_b_x1[idx] = mag_b / std::sqrt(std::abs(a));
    }
  }
  // the xi1 = 0 column only carries the 1/|xi| weight
  for (int i2 = 1; i2 < g.n2(); ++i2) {
    const std::size_t idx = g.index(0, i2);
    const double mag_b = std::hypot(std::abs(state.coeffs[2][idx]), std::abs(state.coeffs[3][idx]));
    w_b_xi[idx] = mag_b / std::abs(g.xi2(i2));
  }
  return std::sqrt(hm2) + fourier_l2l1(g, w_all) + fourier_l1(g, w_b_xi) + fourier_l1(g, w_b_x1);
}

double DiagnosticsRecord::l2_total() const {
  double s = 0.0;
  for (double x : l2) s += x * x;
  return std::sqrt(s);
}

double cancellation_residual(const SpectralState& state, int m) {
  const auto& g = state.grid;
  const Complex iu{0.0, 1.0};
  double i1 = 0.0, i2 = 0.0;
  double d1b = 0.0, vv = 0.0, d1v = 0.0, bb = 0.0;
  for (int a = 0; a < g.n1(); ++a) {
    const double x1 = g.xi1(a);
    for (int b = 0; b < g.n2(); ++b) {
      const double x2 = g.xi2(b);
      const double w = ipow(x1 * x1 + x2 * x2, m);
      const std::size_t idx = g.index(a, b);
      for (int j = 0; j < 2; ++j) {
        const Complex v = state.coeffs[static_cast<std::size_t>(j)][idx];
        const Complex B = state.coeffs[static_cast<std::size_t>(j + 2)][idx];
        i1 += w * (iu * x1 * B * std::conj(v)).real();
        i2 += w * (iu * x1 * v * std::conj(B)).real();
        d1b += w * x1 * x1 * std::norm(B);
        d1v += w * x1 * x1 * std::norm(v);
        vv += w * std::norm(v);
        bb += w * std::norm(B);
      }
    }
  }
  const double scale = std::sqrt(d1b * vv) + std::sqrt(d1v * bb);
  return scale > 0.0 ? std::abs(i1 + i2) / scale : 0.0;
}

DiagnosticsRecord instantaneous(const SpectralState& state, int m) {
  if (m < 1) throw ContractViolation("instantaneous: m must be >= 1");
  const auto& g = state.grid;
  const double lw = g.l2_weight();
  DiagnosticsRecord r;
  r.t = state.time;
  r.m = m;

  std::vector<double> mag_d1B2(g.size()), mag_B2(g.size()), mag_gradB2(g.size()),
      mag_d1v(g.size()), mag_v2w(g.size(), 0.0);
  for (int i1 = 0; i1 < g.n1(); ++i1) {
    const double a = g.xi1(i1);
    const int region = static_cast<int>(classify_region(a));
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const double b = g.xi2(i2);
      const std::size_t idx = g.index(i1, i2);
      const double wm = multi_index_weight(a, b, m);
      const double wm1 = multi_index_weight(a, b, m - 1);
      const Complex v1 = state.coeffs[0][idx], v2 = state.coeffs[1][idx];
      const Complex B1 = state.coeffs[2][idx], B2 = state.coeffs[3][idx];
      const double nv = std::norm(v1) + std::norm(v2);
      const double nb = std::norm(B1) + std::norm(B2);
      r.v_hm2 += wm * nv;
      r.B_hm2 += wm * nb;
      r.d1B_hm2 += a * a * wm1 * nb;
      // Re(conj(B) i xi1 v) = -xi1 Im(conj(B) v)
      r.A -= wm1 * a * ((std::conj(B1) * v1).imag() + (std::conj(B2) * v2).imag());
      r.l2[0] += std::norm(v1);
      r.l2[1] += std::norm(v2);
      r.l2[2] += std::norm(B1);
      r.l2[3] += std::norm(B2);
      r.region_mass[static_cast<std::size_t>(region)] += nv + nb;

      const double b2 = std::abs(B2);
      mag_B2[idx] = b2;
      mag_d1B2[idx] = std::abs(a) * b2;
      mag_gradB2[idx] = std::hypot(a, b) * b2;
      mag_d1v[idx] = std::abs(a) * std::sqrt(nv);
      if (a != 0.0) mag_v2w[idx] = std::abs(v2) / std::sqrt(std::abs(a));
    }
  }
  r.v_hm2 *= lw;
  r.B_hm2 *= lw;
  r.d1B_hm2 *= lw;
  r.A *= lw;
  for (auto& x : r.l2) x = std::sqrt(lw * x);
  for (auto& x : r.region_mass) x *= lw;
  r.E = std::sqrt(r.v_hm2 + r.B_hm2);

  r.d1B2_l1 = fourier_l1(g, mag_d1B2);
  r.B2_l1 = fourier_l1(g, mag_B2);
  r.gradB2_l1 = fourier_l1(g, mag_gradB2);
  r.d1v_l1 = fourier_l1(g, mag_d1v);
  r.v2w_l2l1 = fourier_l2l1(g, mag_v2w);
  r.v2w_l1 = fourier_l1(g, mag_v2w);

  const auto dv1 = to_physical(g, derivative(g, state.coeffs[0], 1, 1));
  const auto dv2 = to_physical(g, derivative(g, state.coeffs[1], 1, 1));
  for (std::size_t i = 0; i < dv1.size(); ++i)
    r.sup_d1v = std::max(r.sup_d1v, std::hypot(dv1[i], dv2[i]));
  r.sup_B2 = max_abs(to_physical(g, state.coeffs[3]));

  r.xm = xm_norm(state, m);
  r.cancel_residual = cancellation_residual(state, m);
  r.divergence = divergence_residual(state);
  r.hermitian = hermitian_residual(state);

  if (std::abs(r.A) > 0.5 * r.E * r.E * (1.0 + 1e-12))
    throw DiagnosticIntegrityError("|A| > E^2/2 at t = " + format_double(r.t));
  return r;
}

CumulativeRecord cumulative(std::span<const DiagnosticsRecord> history, double T) {
  if (history.empty()) throw IncompleteHistoryError("empty history");
  const double eps = 1e-9 * std::max(1.0, std::abs(T));
  if (std::abs(history.front().t) > eps)
    throw IncompleteHistoryError("history does not start at t = 0");
  std::vector<const DiagnosticsRecord*> recs;
  for (const auto& r : history)
    if (r.t <= T + eps) recs.push_back(&r);
  if (recs.back()->t < T - eps)
    throw IncompleteHistoryError("history ends at t = " + format_double(recs.back()->t) +
                                 " before T = " + format_double(T));
  if (recs.size() > 2) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < recs.size(); ++i) gaps.push_back(recs[i]->t - recs[i - 1]->t);
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < gaps.size(); ++i)
      if (gaps[i] > 1.5 * median + eps)
        throw IncompleteHistoryError("history gap at t = " + format_double(recs[i]->t));
  }

  const std::size_t n = recs.size();
  std::vector<double> t(n), diss(n), d1B2(n), B2(n), gB2(n), d1v(n), v2a(n), v2b(n);
  CumulativeRecord c;
  c.T = T;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = *recs[i];
    t[i] = r.t;
    diss[i] = r.v_hm2 + r.d1B_hm2;
    d1B2[i] = r.d1B2_l1;
    B2[i] = r.B2_l1;
    gB2[i] = r.gradB2_l1;
    d1v[i] = r.d1v_l1;
    v2a[i] = r.v2w_l2l1;
    v2b[i] = r.v2w_l1;
    c.sup_E2 = std::max(c.sup_E2, r.E * r.E);
  }
  c.dissipation = trapezoid(t, diss);
  c.G = std::sqrt(c.sup_E2 + c.dissipation);
  c.d1B2_L1L1 = lp_time(t, d1B2, 1.0);
  c.B2_L2L1 = lp_time(t, B2, 2.0);
  c.gradB2_L43L1 = lp_time(t, gB2, 4.0 / 3.0);
  c.d1v_L1L1 = lp_time(t, d1v, 1.0);
  c.v2w_L2L2L1 = lp_time(t, v2a, 2.0);
  c.v2w_L43L1 = lp_time(t, v2b, 4.0 / 3.0);
  c.H = c.d1B2_L1L1 + c.B2_L2L1 + c.gradB2_L43L1 + c.d1v_L1L1 + c.v2w_L2L2L1 + c.v2w_L43L1;
  return c;
}

EmAudit em_inequality_audit(std::span<const DiagnosticsRecord> history, int m,
                            double resolution_fraction) {
  const std::size_t n = history.size();
  if (n < 3) throw AuditResolutionError("energy audit needs at least 3 samples");
  for (const auto& r : history)
    if (r.m != m) throw ContractViolation("energy audit: records carry a different m");
  std::vector<double> t(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = history[i].t;
    x[i] = history[i].E * history[i].E + history[i].A;
  }
  auto centered = [&](std::size_t lo, std::size_t hi) { return (x[hi] - x[lo]) / (t[hi] - t[lo]); };
  // second-order one-sided derivative at i0 from points i0, i1, i2 (any spacing)
  auto one_sided = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    const double h1 = t[i1] - t[i0], h2 = t[i2] - t[i0];
    return (x[i1] * h2 * h2 - x[i2] * h1 * h1 - x[i0] * (h2 * h2 - h1 * h1)) /
           (h1 * h2 * (h2 - h1));
  };

  EmAudit audit;
  for (std::size_t i = 0; i < n; ++i) {
    double d, err;
    if (i == 0) {
      d = one_sided(0, 1, 2);
      err = std::abs(d - centered(0, 1));
    } else if (i == n - 1) {
      d = one_sided(n - 1, n - 2, n - 3);
      err = std::abs(d - centered(n - 2, n - 1));
    } else if (i >= 2 && i + 2 < n) {
      d = centered(i - 1, i + 1);
      err = std::abs(d - centered(i - 2, i + 2)) / 3.0;
    } else {
      d = centered(i - 1, i + 1);
      err = std::abs(d - (i == 1 ? centered(i, i + 1) : centered(i - 1, i)));
    }
    const auto& r = history[i];
    EmAuditRow row;
    row.t = r.t;
    row.lhs = d + 0.5 * r.v_hm2 + 0.5 * r.d1B_hm2;
    row.rhs = r.E * (r.v_hm2 + r.d1B_hm2) + r.sup_d1v * r.B_hm2 +
              r.sup_B2 * std::sqrt(r.d1B_hm2) * std::sqrt(r.B_hm2);
    row.fd_error = err;
    const double size = std::abs(d) + 0.5 * r.v_hm2 + 0.5 * r.d1B_hm2;
    if (err > resolution_fraction * size)
      throw AuditResolutionError("energy audit cadence too coarse at t = " + format_double(r.t) +
                                 " (difference error " + format_double(err) + ")");
    if (row.lhs > 0.0)
      row.implied_C = row.rhs > 0.0 ? row.lhs / row.rhs : std::numeric_limits<double>::infinity();
    audit.implied_C = std::max(audit.implied_C, row.implied_C);
    audit.max_lhs = i == 0 ? row.lhs : std::max(audit.max_lhs, row.lhs);
    audit.rows.push_back(row);
  }
  return audit;
}

InterpolationResult interpolation_audit(const RadialProfile& f, double p, double q, int d) {
  if (!(p > 0.0) || !(q > 0.0) || d < 1) throw ContractViolation("interpolation audit: need p, q > 0");
  if (!f.f || !(f.r_max > f.r_min) || f.r_min < 0.0)
    throw ContractViolation("interpolation audit: bad radial profile");
  const double dd = d;
  if (f.r_min == 0.0 && q >= dd && f.f(1e-8 * f.r_max) != 0.0)
    throw AuditInapplicableError("|x|^{d/2-q} f is not square integrable at the origin");

  std::vector<double> edges;
  if (f.r_min > 0.0) {
    edges = uniform_edges(f.r_min, f.r_max, 64);
  } else {
    edges.push_back(0.0);
    for (int i = 40; i >= 1; --i) {
      const double lo = f.r_max * std::ldexp(1.0, -i);
      for (int s = 1; s <= 4; ++s) edges.push_back(lo + lo * s / 4.0);
    }
  }
  const QuadratureRule rule = composite(gauss_legendre(32), edges);
  const double omega = 2.0 * std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0);
  double l1 = 0.0, hi = 0.0, lo = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double r = rule.nodes[k], w = rule.weights[k];
    const double fv = std::abs(f.f(r));
    if (fv == 0.0) continue;
    const double jac = std::pow(r, dd - 1.0);
    l1 += w * fv * jac;
    hi += w * std::pow(r, dd + 2.0 * p) * fv * fv * jac;
    lo += w * std::pow(r, dd - 2.0 * q) * fv * fv * jac;
  }
  InterpolationResult res;
  res.lhs = omega * l1;
  res.rhs = std::pow(std::sqrt(omega * hi), q / (p + q)) * std::pow(std::sqrt(omega * lo), p / (p + q));
  if (!std::isfinite(res.rhs)) throw AuditInapplicableError("weighted norm diverges");
  return res;
}

InterpolationResult interpolation_audit(const SpectralGrid& grid, std::span<const Complex> g) {
  std::vector<double> mag(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) mag[i] = std::abs(g[i]);
  InterpolationResult res;
  res.lhs = fourier_l1(grid, mag);
  res.rhs = std::sqrt(sobolev_norm(grid, derivative(grid, g, 1, 1), 1.0)) *
            std::sqrt(sobolev_norm(grid, g, 1.0));
  return res;
}

DecayFit fit_decay(const DecayCurve& curve, double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    const double t = curve.times[k];
    if (t < t_lo || t > t_hi) continue;
    const double v = curve.values[k];
    if (!(v > 0.0) || !std::isfinite(v))
      throw FitDomainError("fit_decay: non-positive value at t = " + format_double(t));
    xs.push_back(std::log1p(t));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 10) throw ContractViolation("fit_decay: fewer than 10 samples in window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitDomainError("fit_decay: window has a single time");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.samples = static_cast<int>(xs.size());
  return fit;
}

double physical_l1(const SpectralState& state, int refine) {
  if (refine < 1) throw ContractViolation("physical_l1: refine must be >= 1");
  const auto& g = state.grid;
  SpectralGrid fine = refine == 1 ? g : make_grid(g.n1() * refine, g.n2() * refine, g.l1(), g.l2());
  std::array<PhysicalField, 4> f;
  for (std::size_t c = 0; c < 4; ++c) {
    Field padded(fine.size(), Complex{});
    for (int i1 = 0; i1 < g.n1(); ++i1) {
      const int k1 = g.k1(i1);
      const int j1 = k1 >= 0 ? k1 : k1 + fine.n1();
      for (int i2 = 0; i2 < g.n2(); ++i2) {
        const int k2 = g.k2(i2);
        const int j2 = k2 >= 0 ? k2 : k2 + fine.n2();
        padded[fine.index(j1, j2)] = state.coeffs[c][g.index(i1, i2)];
      }
    }
    f[c] = to_physical(fine, padded);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < fine.size(); ++i)
    s += std::sqrt(f[0][i] * f[0][i] + f[1][i] * f[1][i] + f[2][i] * f[2][i] + f[3][i] * f[3][i]);
  return s * fine.physical_cell_area();
}

SpectralState gaussian_pair(const SpectralGrid& grid, double width) {
  if (!(width > 0.0)) throw ContractViolation("gaussian_pair: width must be > 0");
  PhysicalField psi(grid.size());
  for (int i1 = 0; i1 < grid.n1(); ++i1) {
    const double x = i1 * grid.dx1() - 0.5 * grid.l1();
    for (int i2 = 0; i2 < grid.n2(); ++i2) {
      const double y = i2 * grid.dx2() - 0.5 * grid.l2();
      psi[grid.index(i1, i2)] = std::exp(-(x * x + y * y) / (2.0 * width * width));
    }
  }
  const Field ph = to_spectral(grid, psi);
  SpectralState s = SpectralState::zeros(grid);
  // v = (d2 psi, -d1 psi)
  s.coeffs[0] = derivative(grid, ph, 2, 1);
  s.coeffs[1] = derivative(grid, ph, 1, 1);
  for (auto& z : s.coeffs[1]) z = -z;
  s.coeffs[2] = s.coeffs[0];
  s.coeffs[3] = s.coeffs[1];
  zero_mean(s);
  return s;
}

EmbeddingScan xm_embedding_scan(std::span<const SpectralState> family,
                                std::span<const std::string> labels, int m) {
  EmbeddingScan scan;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto& s = family[k];
    EmbeddingRow row;
    row.label = k < labels.size() ? labels[k] : std::to_string(k);
    row.xm = xm_norm(s, m);
    double hm2 = 0.0;
    for (const auto& c : s.coeffs) {
      const double h = sobolev_norm(s.grid, c, m);
      hm2 += h * h;
    }
    row.hm = std::sqrt(hm2);
    row.l1 = physical_l1(s, 1);
    row.l1_refined = physical_l1(s, 2);
    const double denom = row.hm + row.l1;
    row.ratio = denom > 0.0 ? row.xm / denom : 0.0;
    scan.max_ratio = std::max(scan.max_ratio, row.ratio);
    scan.rows.push_back(row);
  }
  return scan;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsRecord> records) {
  out << kDiagnosticsHeader << '\n';
  for (const auto& r : records) {
    const double cols[] = {r.t,     r.E,     r.A,     r.sup_d1v,    r.sup_B2,
                           r.xm,    r.l2[0], r.l2[1], r.l2[2],      r.l2[3],
                           r.e_residual,    r.cancel_residual,      r.region_mass[0],
                           r.region_mass[1], r.region_mass[2]};
    for (std::size_t i = 0; i < std::size(cols); ++i) out << (i ? "," : "") << format_double(cols[i]);
    out << '\n';
  }
}

void write_decay_csv(std::ostream& out, const DecayCurve& curve) {
  out << "time,value,component\n";
  for (std::size_t k = 0; k < curve.times.size(); ++k)
    out << format_double(curve.times[k]) << ',' << format_double(curve.values[k]) << ','
        << curve.label << '\n';
}

}  // namespace mhd
