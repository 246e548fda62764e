#include "mhd/normal_modes.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "mhd/errors.hpp"
#include "mhd/random.hpp"

namespace mhd {

namespace {

constexpr Complex kI{0.0, 1.0};

// below this |s t / 2| the divided difference uses the sinhc series
constexpr double kSeriesSwitch = 1e-4;

double norm4(const Vec4& f) {
  double s = 0.0;
  for (const auto& z : f) s += std::norm(z);
  return std::sqrt(s);
}

bool real_discriminant(double xi1, double damping) {
  return damping * damping >= 4.0 * xi1 * xi1;
}

}  // namespace

Complex discriminant(double xi1, double damping) {
  const double d = damping * damping - 4.0 * xi1 * xi1;
  if (d >= 0.0) return {std::sqrt(d), 0.0};
  return {0.0, std::sqrt(-d)};
}

EigenPair eigenvalues(double xi1, double damping) {
  if (!std::isfinite(xi1) || !std::isfinite(damping))
    throw ContractViolation("eigenvalues: non-finite input");
  const Complex s = discriminant(xi1, damping);
  EigenPair ev;
  ev.plus = 0.5 * (damping + s);
  if (real_discriminant(xi1, damping)) {
    // product of the roots is xi1^2; avoids cancellation in (c - s)/2
    const double sum = damping + s.real();
    ev.minus = sum > 0.0 ? Complex{2.0 * xi1 * xi1 / sum, 0.0} : Complex{0.0, 0.0};
  } else {
    ev.minus = 0.5 * (damping - s);
  }
  return ev;
}

Mat4 linear_operator(double xi1) {
  const Complex ix = kI * xi1;
  Mat4 J{};
  J[0] = {1.0, 0.0, ix, 0.0};
  J[1] = {0.0, 1.0, 0.0, ix};
  J[2] = {ix, 0.0, 0.0, 0.0};
  J[3] = {0.0, ix, 0.0, 0.0};
  return J;
}

Complex inner(const Vec4& u, const Vec4& w) {
  Complex s{};
  for (std::size_t i = 0; i < 4; ++i) s += u[i] * std::conj(w[i]);
  return s;
}

std::size_t ModeSystem::slot(Branch br, int j) {
  if (j != 1 && j != 2) throw ContractViolation("eigenvector index j must be 1 or 2");
  return static_cast<std::size_t>((br == Branch::plus ? 0 : 2) + (j - 1));
}

const Vec4& ModeSystem::a(Branch br, int j) const { return a_[slot(br, j)]; }

const Vec4& ModeSystem::b(Branch br, int j) const {
  const std::size_t k = slot(br, j);
  if (!b_)
    throw SingularBasisError("reconstruction vectors undefined at xi1 = " +
                             std::to_string(xi1_));
  return (*b_)[k];
}

ModeSystem mode_system(double xi1) {
  const EigenPair ev = eigenvalues(xi1);
  ModeSystem m;
  m.xi1_ = xi1;
  m.s_ = discriminant(xi1);
  m.minus_ = ev.minus;
  m.plus_ = ev.plus;

  // conj(a_{+-}^1) = (i xi1, 0, -lambda_{-+}, 0), conj(a_{+-}^2) likewise on (2, 4)
  const Complex ix = kI * xi1;
  auto conj_vec = [](Vec4 v) {
    for (auto& z : v) z = std::conj(z);
    return v;
  };
  m.a_[ModeSystem::slot(Branch::plus, 1)] = conj_vec({ix, 0.0, -ev.minus, 0.0});
  m.a_[ModeSystem::slot(Branch::plus, 2)] = conj_vec({0.0, ix, 0.0, -ev.minus});
  m.a_[ModeSystem::slot(Branch::minus, 1)] = conj_vec({ix, 0.0, -ev.plus, 0.0});
  m.a_[ModeSystem::slot(Branch::minus, 2)] = conj_vec({0.0, ix, 0.0, -ev.plus});

  if (xi1 != 0.0 && m.s_ != Complex{0.0, 0.0}) {
    const Complex pre = 1.0 / (xi1 * m.s_);
    std::array<Vec4, 4> b{};
    b[ModeSystem::slot(Branch::plus, 1)] = {-kI * ev.plus * pre, 0.0, xi1 * pre, 0.0};
    b[ModeSystem::slot(Branch::plus, 2)] = {0.0, -kI * ev.plus * pre, 0.0, xi1 * pre};
    b[ModeSystem::slot(Branch::minus, 1)] = {kI * ev.minus * pre, 0.0, -xi1 * pre, 0.0};
    b[ModeSystem::slot(Branch::minus, 2)] = {0.0, kI * ev.minus * pre, 0.0, -xi1 * pre};
    m.b_ = b;
  }
  return m;
}

Complex divided_difference(double xi1, double t, double damping) {
  if (!(t >= 0.0)) throw ContractViolation("divided_difference: t must be >= 0");
  if (t == 0.0) return {0.0, 0.0};
  const Complex s = discriminant(xi1, damping);
  const Complex z = 0.5 * s * t;
  if (std::abs(z) < kSeriesSwitch) {
    const Complex z2 = z * z;
    const Complex sinhc =
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0 * (1.0 + z2 / 72.0)));
    return t * std::exp(-0.5 * damping * t) * sinhc;
  }
  if (real_discriminant(xi1, damping)) {
    const double sr = s.real();
    const double lam_minus = eigenvalues(xi1, damping).minus.real();
    return {std::exp(-lam_minus * t) * (-std::expm1(-sr * t)) / sr, 0.0};
  }
  const double y = 0.5 * s.imag() * t;
  return {t * std::exp(-0.5 * damping * t) * std::sin(y) / y, 0.0};
}

Decomposition anisotropic_decompose(const Vec4& f, double xi1, double t, Row row) {
  if (!(t >= 0.0)) throw ContractViolation("anisotropic_decompose: t must be >= 0");
  const EigenPair ev = eigenvalues(xi1);
  const Complex ix = kI * xi1;
  // <f, a_-^2> = i xi1 f2 - lambda_+ f4
  const Complex f_a = ix * f[1] - ev.plus * f[3];
  // s <b_-^2, e2> = i lambda_- / xi1,  s <b_-^2, e4> = -1
  Complex s_b;
  if (row == Row::e4) {
    s_b = -1.0;
  } else if (real_discriminant(xi1, 1.0)) {
    s_b = kI * (2.0 * xi1 / (1.0 + discriminant(xi1).real()));
  } else {
    s_b = kI * ev.minus / xi1;
  }
  Decomposition d;
  d.resonant = divided_difference(xi1, t) * f_a * s_b;
  d.damped = std::exp(-ev.plus * t) * (row == Row::e2 ? f[1] : f[3]);
  return d;
}

Region classify_region(double xi1) {
  const double a = std::abs(xi1);
  if (a >= 0.5) return Region::omega1;
  if (a >= 0.25) return Region::omega2;
  return Region::omega3;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::omega1: return "omega1";
    case Region::omega2: return "omega2";
    default: return "omega3";
  }
}

double BoundSample::ratio() const {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

std::vector<BoundSample> lemma_bounds_audit(const Vec4& f, Wavenumber xi, double t) {
  const double x = xi.xi1;
  const double r2 = std::abs(anisotropic_decompose(f, x, t, Row::e2).resonant);
  const double r4 = std::abs(anisotropic_decompose(f, x, t, Row::e4).resonant);
  const Region region = classify_region(x);
  if (region == Region::omega1 || region == Region::omega2) {
    return {{region == Region::omega1 ? "Omg_1" : "Omg_2", r2 + r4,
             std::exp(-0.25 * t) * norm4(f)}};
  }
  const double decay = std::exp(-x * x * t);
  const double f2 = std::abs(f[1]);
  const double f4 = std::abs(f[3]);
  return {{"Omg_4", r2, decay * (x * x * f2 + std::abs(x) * f4)},
          {"Omg_3", r4, decay * (std::abs(x) * f2 + f4)}};
}

LemmaScanResult lemma_scan(const LemmaScanConfig& cfg, bool keep_rows) {
  if (!(cfg.xi_step > 0.0) || !(cfg.xi_max >= cfg.xi_min) || cfg.samples < 1)
    throw ConfigError("lemma scan: invalid grid");
  Rng rng(cfg.seed);
  std::vector<Vec4> fs(static_cast<std::size_t>(cfg.samples));
  for (auto& f : fs)
    for (auto& z : f) z = {rng.normal(), rng.normal()};

  const long n = std::lround((cfg.xi_max - cfg.xi_min) / cfg.xi_step);
  static const char* kOrder[] = {"Omg_1", "Omg_2", "Omg_4", "Omg_3"};
  std::map<std::string, LemmaScanRow> worst;
  LemmaScanResult result;
  for (long i = 0; i <= n; ++i) {
    const double x = cfg.xi_min + static_cast<double>(i) * cfg.xi_step;
    for (double t : cfg.times) {
      std::map<std::string, LemmaScanRow> local;
      for (int k = 0; k < cfg.samples; ++k) {
        for (const auto& b : lemma_bounds_audit(fs[static_cast<std::size_t>(k)], {x, 0.0}, t)) {
          LemmaScanRow row{b.id, x, t, b.lhs, b.rhs, b.ratio(), k};
          auto it = local.find(b.id);
          if (it == local.end() || row.ratio > it->second.ratio) local[b.id] = row;
        }
      }
      for (auto& [id, row] : local) {
        auto it = worst.find(id);
        if (it == worst.end() || row.ratio > it->second.ratio) worst[id] = row;
        if (keep_rows) result.rows.push_back(row);
      }
    }
  }
  for (const char* id : kOrder)
    if (auto it = worst.find(id); it != worst.end()) result.worst.push_back(it->second);
  result.samples = std::move(fs);
  return result;
}

}  // namespace mhd
