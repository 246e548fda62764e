#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>

#include "mhd/errors.hpp"
#include "mhd/normal_modes.hpp"

using namespace mhd;
using big = boost::multiprecision::cpp_dec_float_50;

namespace {

Vec4 random_vec(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec4 v;
  for (auto& z : v) z = {n(rng), n(rng)};
  return v;
}

double vnorm(const Vec4& v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

// (e^{-l- t} - e^{-l+ t}) / (l+ - l-) in 50 digits, |xi1| < 1/2
double naive_dd(double xi1, double t) {
  const big x(xi1), tt(t);
  const big s = sqrt(big(1) - 4 * x * x);
  const big lm = (1 - s) / 2, lp = (1 + s) / 2;
  return static_cast<double>((exp(-lm * tt) - exp(-lp * tt)) / (lp - lm));
}

Complex direct_sum(const Vec4& f, double xi1, double t, int row) {
  const ModeSystem ms = mode_system(xi1);
  Complex sum = 0.0;
  for (Branch br : {Branch::minus, Branch::plus})
    sum += std::exp(-ms.lambda(br) * t) * inner(f, ms.a(br, 2)) * ms.b(br, 2)[row];
  return sum;
}

}  // namespace

TEST_CASE("eigenvalues at the reference points") {
  auto e = eigenvalues(0.0);
  CHECK(std::abs(e.minus) <= 1e-15);
  CHECK(std::abs(e.plus - 1.0) <= 1e-15);
  e = eigenvalues(0.5);
  CHECK(std::abs(e.minus - 0.5) <= 1e-15);
  CHECK(std::abs(e.plus - 0.5) <= 1e-15);
  e = eigenvalues(1.0);
  CHECK(std::abs(e.minus - Complex(0.5, -std::sqrt(3.0) / 2)) <= 1e-15);
  CHECK(std::abs(e.plus - Complex(0.5, std::sqrt(3.0) / 2)) <= 1e-15);
  for (double t : {0.5, 3.0, 20.0}) {
    CHECK(std::abs(std::exp(-e.minus * t)) == doctest::Approx(std::exp(-t / 2)).epsilon(1e-14));
    CHECK(std::abs(std::exp(-e.plus * t)) == doctest::Approx(std::exp(-t / 2)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(eigenvalues(NAN), ContractViolation);
  CHECK_THROWS_AS(eigenvalues(INFINITY), ContractViolation);
}

TEST_CASE("Vieta relations and the real-range bounds") {
  for (int i = -4000; i <= 4000; ++i) {
    const double x = i * 1e-3;
    const auto e = eigenvalues(x);
    CHECK(std::abs(e.minus + e.plus - 1.0) <= 1e-14);
    CHECK(std::abs(e.minus * e.plus - x * x) <= 1e-14 * std::max(1.0, x * x));
    if (std::abs(x) <= 0.5) {
      CHECK(e.minus.imag() == 0.0);
      CHECK(e.minus.real() >= 0.0);
      CHECK(e.minus.real() <= 0.5);
      CHECK(e.plus.real() >= 0.5);
      CHECK(e.plus.real() <= 1.0);
      CHECK(e.minus.real() >= x * x * (1 - 1e-15));
    } else {
      CHECK(e.minus.real() == doctest::Approx(0.5));
      CHECK(e.plus.real() == doctest::Approx(0.5));
      CHECK(discriminant(x).imag() > 0.0);
    }
  }
}

TEST_CASE("eigenvectors satisfy J conj(a) = lambda conj(a)") {
  for (double x : {-3.0, -0.7, -0.5, -0.3, 0.0, 0.1, 0.25, 0.4999, 0.5, 0.6, 2.0}) {
    const Mat4 J = linear_operator(x);
    const ModeSystem ms = mode_system(x);
    for (Branch br : {Branch::minus, Branch::plus})
      for (int j : {1, 2}) {
        Vec4 ca;
        for (int i = 0; i < 4; ++i) ca[i] = std::conj(ms.a(br, j)[i]);
        double res = 0.0;
        for (int r = 0; r < 4; ++r) {
          Complex y = 0.0;
          for (int c = 0; c < 4; ++c) y += J[r][c] * ca[c];
          res = std::max(res, std::abs(y - ms.lambda(br) * ca[r]));
        }
        CHECK(res <= 1e-12 * std::max(1.0, vnorm(ca)));
      }
  }
}

TEST_CASE("reconstruction identity") {
  std::mt19937_64 rng(5);
  const ModeSystem ms = mode_system(0.3);
  for (int k = 0; k < 100; ++k) {
    const Vec4 u = random_vec(rng);
    Vec4 r{};
    for (Branch br : {Branch::minus, Branch::plus})
      for (int j : {1, 2}) {
        const Complex c = inner(u, ms.a(br, j));
        for (int i = 0; i < 4; ++i) r[i] += c * ms.b(br, j)[i];
      }
    Vec4 d;
    for (int i = 0; i < 4; ++i) d[i] = r[i] - u[i];
    CHECK(vnorm(d) <= 1e-10 * vnorm(u));
  }
}

TEST_CASE("reconstruction basis near and at the degenerate lines") {
  const ModeSystem near = mode_system(0.5 - 1e-6);
  CHECK(vnorm(near.b(Branch::minus, 2)) > 1e2);
  CHECK(vnorm(near.b(Branch::plus, 2)) > 1e2);
  for (double x : {0.5, -0.5, 0.0}) {
    const ModeSystem ms = mode_system(x);
    CHECK_FALSE(ms.has_reconstruction_basis());
    CHECK_THROWS_AS(ms.b(Branch::minus, 2), SingularBasisError);
    CHECK_THROWS_AS(ms.b(Branch::plus, 1), SingularBasisError);
  }
}

TEST_CASE("divided difference") {
  for (double t : {0.0, 0.3, 1.0, 7.0, 40.0}) {
    CHECK(std::abs(divided_difference(0.5, t) - t * std::exp(-t / 2)) <= 1e-15);
    CHECK(std::abs(divided_difference(0.0, t) - (1 - std::exp(-t))) <= 1e-15);
  }
  const double ref = naive_dd(0.4999, 5.0);
  CHECK(std::abs(divided_difference(0.4999, 5.0).real() - ref) <= 1e-10 * std::abs(ref));
  CHECK(std::abs(divided_difference(0.4999, 5.0).imag()) == 0.0);
  CHECK_THROWS_AS(divided_difference(0.3, -1.0), ContractViolation);

  // naive quotient in double precision where it is well conditioned
  for (double x : {0.0, 0.1, 0.3, 0.45, 0.49, 0.51, 0.8, 2.0, -1.3}) {
    const EigenPair e = eigenvalues(x);
    if (std::abs(e.plus - e.minus) < 1e-2) continue;
    for (double t : {0.01, 0.5, 3.0, 30.0}) {
      const Complex q = (std::exp(-e.minus * t) - std::exp(-e.plus * t)) / (e.plus - e.minus);
      CHECK(std::abs(divided_difference(x, t) - q) <= 1e-10 * std::abs(q));
    }
  }
  // series branch against the extended-precision quotient
  for (double x : {0.5 - 1e-9, 0.5 - 1e-7, 0.49999}) {
    for (double t : {0.1, 2.0, 50.0}) {
      const double r = naive_dd(x, t);
      CHECK(std::abs(divided_difference(x, t).real() - r) <= 1e-12 * std::abs(r));
    }
  }
}

TEST_CASE("anisotropic decomposition") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 5; ++k) {
    const Vec4 f = random_vec(rng);
    const auto d0 = anisotropic_decompose(f, 0.3, 0.0, Row::e2);
    CHECK(std::abs(d0.total() - f[1]) <= 1e-12 * vnorm(f));
    const auto d4 = anisotropic_decompose(f, 0.3, 0.0, Row::e4);
    CHECK(std::abs(d4.total() - f[3]) <= 1e-12 * vnorm(f));
    for (int row : {1, 3}) {
      const auto d = anisotropic_decompose(f, 0.35, 2.0, row == 1 ? Row::e2 : Row::e4);
      CHECK(std::abs(d.total() - direct_sum(f, 0.35, 2.0, row)) <= 1e-12 * vnorm(f));
      CHECK(std::abs(d.damped - std::exp(-eigenvalues(0.35).plus * 2.0) * f[row]) <= 1e-14 * vnorm(f));
    }
  }
  const Vec4 e4{0, 0, 0, 1};
  const auto at = anisotropic_decompose(e4, 0.5, 1.0, Row::e4);
  CHECK(std::isfinite(at.resonant.real()));
  CHECK(std::isfinite(at.resonant.imag()));
  CHECK(std::isfinite(anisotropic_decompose(e4, 0.0, 1.0, Row::e2).total().real()));

  // continuity across xi1 = 1/2
  const Vec4 f = random_vec(rng);
  for (Row row : {Row::e2, Row::e4})
    for (double t : {0.5, 2.0, 10.0}) {
      const Complex lo = anisotropic_decompose(f, 0.5 - 1e-4, t, row).total();
      const Complex mid = anisotropic_decompose(f, 0.5, t, row).total();
      const Complex hi = anisotropic_decompose(f, 0.5 + 1e-4, t, row).total();
      CHECK(std::abs(lo - mid) <= 1e-3 * vnorm(f));
      CHECK(std::abs(hi - mid) <= 1e-3 * vnorm(f));
      // a smooth function: the second difference is O(step^2)
      CHECK(std::abs(lo - 2.0 * mid + hi) <= 1e-6 * vnorm(f));
    }
}

TEST_CASE("strip regions and tie-breaks") {
  CHECK(classify_region(0.6) == Region::omega1);
  CHECK(classify_region(-0.6) == Region::omega1);
  CHECK(classify_region(0.3) == Region::omega2);
  CHECK(classify_region(0.1) == Region::omega3);
  CHECK(classify_region(0.5) == Region::omega1);
  CHECK(classify_region(-0.5) == Region::omega1);
  CHECK(classify_region(0.25) == Region::omega2);
  CHECK(classify_region(Wavenumber{-0.25, 9.0}) == Region::omega2);
  CHECK(classify_region(0.0) == Region::omega3);
}

TEST_CASE("Lemma bounds audit: pointwise cases") {
  const Vec4 e4{0, 0, 0, 1};
  const auto at0 = lemma_bounds_audit(e4, {0.1, 0.0}, 0.0);
  REQUIRE(at0.size() == 2);
  CHECK(at0[1].id == "Omg_3");
  CHECK(at0[1].rhs == doctest::Approx(1.0));
  CHECK(std::isfinite(at0[1].lhs));

  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vec4 f = random_vec(rng);
    for (double t : {0.1, 1.0, 10.0}) {
      const auto b = lemma_bounds_audit(f, {0.45, 0.0}, t);
      REQUIRE(b.size() == 1);
      CHECK(b[0].id == "Omg_2");
      CHECK(std::isfinite(b[0].ratio()));
      CHECK(b[0].ratio() < 10.0);
    }
  }

  // f = e2 at xi1 = 0.1: row e2 scales like xi1^2 e^{-xi1^2 t}
  const Vec4 e2{0, 1, 0, 0};
  double worst = 0.0;
  for (double t = 0.0; t <= 1000.0; t += 0.5) worst = std::max(worst, lemma_bounds_audit(e2, {0.1, 0.0}, t)[0].ratio());
  CHECK(worst < 3.0);
  for (double t : {3.0, 300.0}) {
    const auto b = lemma_bounds_audit(e2, {0.1, 0.0}, t)[0];
    CHECK(b.lhs <= worst * std::exp(-0.01 * t) * 0.01 * (1 + 1e-12));
  }
}

TEST_CASE("Lemma scan over the default grid") {
  const LemmaScanResult res = lemma_scan(LemmaScanConfig{}, false);
  REQUIRE(res.worst.size() == 4);
  CHECK(res.worst[0].id == "Omg_1");
  CHECK(res.worst[1].id == "Omg_2");
  CHECK(res.worst[2].id == "Omg_4");
  CHECK(res.worst[3].id == "Omg_3");
  for (const auto& w : res.worst) CHECK(std::isfinite(w.ratio));
  CHECK(res.worst[0].ratio <= 1e3);
  CHECK(res.worst[2].ratio <= 1e3);
  CHECK(res.worst[3].ratio <= 1e3);
  CHECK(res.samples.size() == 20);

  // The e^{-t/4} bound stated for the middle strip cannot hold where
  // lambda_- < 1/4, i.e. 1/4 <= |xi1| < sqrt(3)/4: there the resonant part
  // decays like e^{-lambda_- t}. The scan reproduces that growth.
  const auto& w = res.worst[1];
  CHECK(std::abs(w.xi1) < std::sqrt(3.0) / 4);
  CHECK(w.t == 100.0);
  const double lm = eigenvalues(w.xi1).minus.real();
  CHECK(w.ratio > 1e3);
  CHECK(std::log(w.ratio) == doctest::Approx((0.25 - lm) * w.t).epsilon(0.1));
}

TEST_CASE("Lemma scan is deterministic in the seed") {
  LemmaScanConfig c;
  c.xi_min = -1;
  c.xi_max = 1;
  c.xi_step = 0.01;
  const auto a = lemma_scan(c), b = lemma_scan(c);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].ratio == b.rows[i].ratio);
  c.seed = 2;
  const auto d = lemma_scan(c);
  CHECK(d.samples[0][0] != a.samples[0][0]);
  c.xi_step = 0;
  CHECK_THROWS_AS(lemma_scan(c), ConfigError);
}
