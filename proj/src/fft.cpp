#include "mhd/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <utility>

namespace mhd {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftPlan2d::FftPlan2d(int n1, int n2) : n1_(n1), n2_(n2) {
  const std::size_t n = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
  std::lock_guard lock(planner_mutex());
  auto* buf = fftw_alloc_complex(n);
  if (buf == nullptr) throw std::bad_alloc();
  buffer_ = buf;
  forward_plan_ = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftPlan2d::~FftPlan2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(buffer_);
}

void FftPlan2d::forward(std::span<const double> values,
                        std::span<std::complex<double>> coeffs) {
  auto* buf = static_cast<fftw_complex*>(buffer_);
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = values[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) coeffs[i] = {buf[i][0] * scale, buf[i][1] * scale};
}

void FftPlan2d::inverse(std::span<const std::complex<double>> coeffs,
                        std::span<double> values) {
  auto* buf = static_cast<fftw_complex*>(buffer_);
  const std::size_t n = coeffs.size();
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = coeffs[i].real();
    buf[i][1] = coeffs[i].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  for (std::size_t i = 0; i < n; ++i) values[i] = buf[i][0];
}

FftPlan2d& fft_plan_for(int n1, int n2) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<FftPlan2d>> cache;
  auto& slot = cache[{n1, n2}];
  if (!slot) slot = std::make_unique<FftPlan2d>(n1, n2);
  return *slot;
}

}  // namespace mhd
