#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "mhd/errors.hpp"
#include "mhd/linear_propagator.hpp"
#include "expm_oracle.hpp"
#include "support.hpp"

using namespace mhd;
using std::numbers::pi;

using namespace oracle;

TEST_CASE("propagator block special cases") {
  for (double t : {0.0, 0.5, 4.0}) {
    const Mat2 m = propagator_block(0.0, t).entries;
    CHECK(std::abs(m.m00 - std::exp(-t)) <= 1e-15);
    CHECK(std::abs(m.m11 - 1.0) <= 1e-15);
    CHECK(std::abs(m.m01) <= 1e-15);
    CHECK(std::abs(m.m10) <= 1e-15);
  }
  for (double x : {0.0, 0.3, 0.5, 1.7})
    CHECK(max_abs_diff(propagator_block(x, 0.0).entries, Mat2::identity()) <= 1e-15);
  CHECK_THROWS_AS(propagator_block(0.2, -1e-3), ContractViolation);
}

TEST_CASE("propagator block against scaling and squaring") {
  double worst = 0;
  for (double x : {0.1, 0.25, 0.4999, 0.5, 0.5 - 1e-9, 0.5 + 1e-9, -0.5 + 1e-9, 0.7, 2.0, -1.1})
    for (double t : {0.01, 1.0, 10.0, 100.0})
      worst = std::max(worst, diff(propagator_block(x, t).entries, expm(minus_tk(x, t))));
  CHECK(worst <= 1e-12);
  // generalized damping symbol
  for (double c : {0.0, 0.2, 3.0})
    for (double x : {0.05, 0.5 * c, 1.3})
      for (double t : {0.1, 5.0})
        CHECK(diff(propagator_block(x, t, c).entries, expm(minus_tk(x, t, c))) <= 1e-12);
}

TEST_CASE("semigroup law and growth bound") {
  for (double x : {0.0, 0.2, 0.5, 0.5 + 1e-7, 0.9, 3.0})
    for (auto [a, b] : {std::pair{0.3, 1.2}, std::pair{5.0, 7.5}, std::pair{20.0, 30.0}}) {
      const Mat2 ab = propagator_block(x, a).entries * propagator_block(x, b).entries;
      CHECK(max_abs_diff(ab, propagator_block(x, a + b).entries) <= 1e-12);
    }
  for (double x : {0.05, 0.3, 0.5, 0.8, 2.0})
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
      const EigenPair e = eigenvalues(x);
      const double rate = std::min(e.minus.real(), e.plus.real());
      CHECK(operator_norm(propagator_block(x, t).entries) <= 3.0 * (1 + t) * std::exp(-rate * t));
    }
}

TEST_CASE("phi functions") {
  CHECK(std::abs(phi(1, 0.0) - 1.0) <= 1e-16);
  CHECK(std::abs(phi(2, 0.0) - 0.5) <= 1e-16);
  for (Complex z : {Complex(-0.3, 0.1), Complex(-5, 2), Complex(-40, 0), Complex(1e-6, 0)}) {
    CHECK(std::abs(phi(0, z) - std::exp(z)) <= 1e-14 * std::abs(std::exp(z)) + 1e-300);
    CHECK(std::abs(phi(1, z) - (std::exp(z) - 1.0) / z) <= 1e-9 * std::abs(phi(1, z)));
  }
  CHECK(std::abs(phi(2, Complex(-20, 0)) - (std::exp(-20.0) - 1.0 + 20.0) / 400.0) <= 1e-15);
}

TEST_CASE("phi1 block") {
  for (double dt : {0.01, 0.5, 2.0}) {
    const Mat2 p = phi1_block(0.0, dt);
    CHECK(std::abs(p.m00 + std::expm1(-dt) / dt) <= 1e-15);
    CHECK(std::abs(p.m11 - 1.0) <= 1e-15);
    CHECK(std::abs(p.m01) <= 1e-15);
  }
  CHECK(max_abs_diff(phi1_block(0.3, 1e-8), Mat2::identity()) <= 1e-7);
  CHECK(max_abs_diff(phi1_block(0.5, 1e-8), Mat2::identity()) <= 1e-7);
  CHECK_THROWS_AS(phi1_block(0.3, 0.0), ContractViolation);
  CHECK_THROWS_AS(phi1_block(0.3, -1.0), ContractViolation);
}

TEST_CASE("phi1 and phi2 blocks against the augmented exponential") {
  for (double x : {0.5, 0.5 - 1e-9, 0.5 + 1e-6, 0.1, 0.0, 1.4})
    for (double dt : {0.1, 1.0, 7.0}) {
      // [[A, I, 0], [0, 0, I], [0, 0, 0]]: top blocks carry phi1(A) and phi2(A)
      const LMat a = minus_tk(x, dt);
      LMat aug(6, std::vector<LC>(6));
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) aug[i][j] = a[i][j];
        aug[i][i + 2] = 1;
        aug[i + 2][i + 4] = 1;
      }
      const LMat e = expm(aug);
      CHECK(diff(phi_block(1, x, dt), e, 0, 2) <= 1e-12);
      CHECK(diff(phi_block(2, x, dt), e, 0, 4) <= 1e-12);
    }
}

namespace {

using OdeState = std::vector<double>;

// grid convention d1 -> i xi1: dv/dt = -c v + i xi1 B, dB/dt = i xi1 v
struct ModeOde {
  double xi1;
  double c;
  void operator()(const OdeState& y, OdeState& dy, double) const {
    for (int p = 0; p < 2; ++p) {
      const Complex v(y[4 * p], y[4 * p + 1]), b(y[4 * p + 2], y[4 * p + 3]);
      const Complex dv = -c * v + Complex(0, xi1) * b, db = Complex(0, xi1) * v;
      dy[4 * p] = dv.real();
      dy[4 * p + 1] = dv.imag();
      dy[4 * p + 2] = db.real();
      dy[4 * p + 3] = db.imag();
    }
  }
};

SpectralState ode_oracle(const SpectralState& s, double t, DampingModel d) {
  namespace odeint = boost::numeric::odeint;
  SpectralState out = s;
  const auto& g = s.grid;
  for (int i1 = 0; i1 < g.n1(); ++i1)
    for (int i2 = 0; i2 < g.n2(); ++i2) {
      const auto k = g.index(i1, i2);
      // pairs (v1, B1) and (v2, B2)
      OdeState y = {s.coeffs[0][k].real(), s.coeffs[0][k].imag(), s.coeffs[2][k].real(), s.coeffs[2][k].imag(),
                    s.coeffs[1][k].real(), s.coeffs[1][k].imag(), s.coeffs[3][k].real(), s.coeffs[3][k].imag()};
      odeint::integrate_adaptive(
          odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<OdeState>()),
          ModeOde{g.xi1(i1), d.symbol(g.xi1(i1), g.xi2(i2))}, y, 0.0, t, 1e-3);
      out.coeffs[0][k] = {y[0], y[1]};
      out.coeffs[2][k] = {y[2], y[3]};
      out.coeffs[1][k] = {y[4], y[5]};
      out.coeffs[3][k] = {y[6], y[7]};
    }
  out.time = s.time + t;
  return out;
}

double total_l2(const SpectralState& s) {
  double e = 0;
  for (const auto& c : s.coeffs) e += std::pow(l2_norm(s.grid, c), 2);
  return std::sqrt(e);
}

}  // namespace

TEST_CASE("apply_semigroup against a per-mode ODE integration") {
  const auto g = make_grid(16, 8, 8 * pi, 4 * pi);
  const auto s = test::random_state(g, 21);
  for (DampingModel d : {DampingModel{}, DampingModel{0.5, 0.3}, DampingModel{1.0, 2.0}}) {
    const auto a = apply_semigroup(s, 3.0, d);
    const auto o = ode_oracle(s, 3.0, d);
    CHECK(test::max_diff(a, o) <= 1e-8 * test::max_abs(s));
    CHECK(hermitian_residual(a) <= 1e-14);
    CHECK(divergence_residual(a) <= 1e-13);
    CHECK(a.time == 3.0);
  }
}

TEST_CASE("apply_semigroup identity, composition and energy") {
  const auto g = make_grid(16, 16, 12.0, 9.0);
  const auto s = test::random_state(g, 22);
  CHECK(test::max_diff(apply_semigroup(s, 0.0), s) == 0.0);
  const auto twice = apply_semigroup(apply_semigroup(s, 1.0), 1.0);
  const auto once = apply_semigroup(s, 2.0);
  CHECK(test::max_diff(twice, once) <= 1e-12 * test::max_abs(once));
  double last = total_l2(s);
  for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double e = total_l2(apply_semigroup(s, t));
    CHECK(e <= last * (1 + 1e-14));
    last = e;
  }
}

TEST_CASE("cutoff and prop25 profile") {
  CHECK(cutoff_sigma(0.0) == 1.0);
  CHECK(cutoff_sigma(0.25) == 0.0);
  CHECK(cutoff_sigma(0.3) == 0.0);
  const double s01 = std::exp(1 - 1 / (1 - 0.16));
  CHECK(cutoff_sigma(0.1) == doctest::Approx(s01).epsilon(1e-15));

  const ProfileData p = build_profile(ProfileKind::prop25);
  const Vec4 v = p(0.1, 0.1);
  const double w = s01 * s01;
  CHECK(std::abs(v[0] - 0.1 * w) <= 1e-16);
  CHECK(std::abs(v[1] + 0.1 * w) <= 1e-16);
  CHECK(std::abs(v[2] - 0.1 * w) <= 1e-16);
  CHECK(std::abs(v[3] + 0.1 * w) <= 1e-16);
  for (double a = -0.3; a <= 0.3; a += 0.0137)
    for (double b = -0.3; b <= 0.3; b += 0.0191) {
      const Vec4 f = p(a, b);
      CHECK(std::abs(a * f[0] + b * f[1]) <= 1e-17);
      CHECK(std::abs(a * f[2] + b * f[3]) <= 1e-17);
    }
  for (const auto& z : p(0.3, 0.01)) CHECK(z == Complex(0.0));
  for (const auto& z : build_profile(ProfileKind::fstar)(-0.3, 0.0)) CHECK(z == Complex(0.0));
}

TEST_CASE("fstar profile requires phi(0) != 0") {
  ProfileParams params;
  params.phi = [](double x) { return Complex(x, 0); };
  CHECK_THROWS_AS(build_profile(ProfileKind::fstar, params), ContractViolation);
  CHECK_THROWS_AS(build_profile(ProfileKind::custom), ContractViolation);
  params.phi = [](double x) { return Complex(2 + x, 0); };
  CHECK(build_profile(ProfileKind::fstar, params).scalar);
}

TEST_CASE("decay curve at t = 0 equals the profile norm") {
  using boost::math::quadrature::gauss_kronrod;
  auto s2 = [](double x) { return std::pow(cutoff_sigma(std::abs(x)), 2); };
  const double i0 = gauss_kronrod<double, 61>::integrate(s2, -0.25, 0.25, 15, 1e-14);
  const double i2 = gauss_kronrod<double, 61>::integrate([&](double x) { return x * x * s2(x); }, -0.25,
                                                         0.25, 15, 1e-14);
  const ProfileData p = build_profile(ProfileKind::prop25);
  const std::vector<double> t0{0.0};
  // v1 = xi2 sigma sigma, v2 = -xi1 sigma sigma: both have norm sqrt(i0 i2)
  for (Component c : {Component::v1, Component::B2}) {
    const DecayCurve curve = linear_decay_curve(p, ComponentWeight{c}, t0);
    CHECK(curve.values[0] == doctest::Approx(std::sqrt(i0 * i2)).epsilon(1e-9));
  }
  CHECK(linear_decay_curve(p, ComponentWeight{Component::v1}, t0).label == "v1");
  CHECK(linear_decay_curve(build_profile(ProfileKind::fstar), XiPowerWeight{1}, t0).label == "xi1^1");
}

TEST_CASE("decay curve argument checks") {
  const ProfileData p = build_profile(ProfileKind::prop25);
  const std::vector<double> bad{1.0, 1.0};
  CHECK_THROWS_AS(linear_decay_curve(p, ComponentWeight{Component::v1}, bad), ContractViolation);
  const std::vector<double> neg{-1.0, 1.0};
  CHECK_THROWS_AS(linear_decay_curve(p, ComponentWeight{Component::v1}, neg), ContractViolation);
  const std::vector<double> ok{1.0, 10.0};
  CHECK_THROWS_AS(linear_decay_curve(build_profile(ProfileKind::fstar), ComponentWeight{Component::v1}, ok),
                  ContractViolation);
  QuadratureOptions strict;
  strict.rel_tol = 1e-17;
  strict.max_refinements = 1;
  CHECK_THROWS_AS(linear_decay_curve(p, ComponentWeight{Component::v1}, ok, strict), NumericalAccuracyError);
}

TEST_CASE("log-spaced times hit the decades exactly") {
  const auto t = log_spaced_times(1, 1e4, 81);
  REQUIRE(t.size() == 81);
  CHECK(t.front() == 1.0);
  CHECK(t[20] == 10.0);
  CHECK(t[40] == 100.0);
  CHECK(t.back() == 1e4);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
}

TEST_CASE("prop25 decay slopes") {
  const ProfileData p = build_profile(ProfileKind::prop25);
  const auto times = log_spaced_times(100, 1e4, 21);
  const std::pair<Component, double> expected[] = {
      {Component::v1, -0.75}, {Component::v2, -1.25}, {Component::B1, -0.25}, {Component::B2, -0.75}};
  for (const auto& [c, slope] : expected) {
    const DecayCurve curve = linear_decay_curve(p, ComponentWeight{c}, times);
    // least squares on (log(1+t), log value), written out here
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double x = std::log1p(times[i]), y = std::log(curve.values[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double fitted = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(fitted == doctest::Approx(slope).epsilon(0.05 / std::abs(slope)));
  }
}

TEST_CASE("fstar j = 1 plateau") {
  const auto times = log_spaced_times(10, 1e4, 31);
  const DecayCurve c = linear_decay_curve(build_profile(ProfileKind::fstar), XiPowerWeight{1}, times);
  double lo = INFINITY, hi = 0, last_lo = INFINITY, last_hi = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double n = std::pow(1 + times[i], 0.75) * c.values[i];
    lo = std::min(lo, n);
    hi = std::max(hi, n);
    if (times[i] >= 1e3) {
      last_lo = std::min(last_lo, n);
      last_hi = std::max(last_hi, n);
    }
  }
  CHECK(lo > 0.0);
  CHECK(std::isfinite(hi));
  CHECK(hi / lo < 5.0);
  // flat over the last decade
  CHECK(last_hi / last_lo < 1.05);
}
