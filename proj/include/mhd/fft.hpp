#pragma once

#include <complex>
#include <span>

namespace mhd {

/// Complex 2D FFT of fixed shape backed by FFTW (estimate-mode plans, so the
/// output is bitwise reproducible for a given shape). Not shareable between
/// threads; fft_plan_for() hands out one plan per thread and shape.
class FftPlan2d {
 public:
  FftPlan2d(int n1, int n2);
  ~FftPlan2d();
  FftPlan2d(const FftPlan2d&) = delete;
  FftPlan2d& operator=(const FftPlan2d&) = delete;

  // spectral <- (1/(n1 n2)) sum_x f(x) e^{-i k.x}
  void forward(std::span<const double> values, std::span<std::complex<double>> coeffs);
  // f(x) <- Re sum_k c_k e^{i k.x}
  void inverse(std::span<const std::complex<double>> coeffs, std::span<double> values);

  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }

 private:
  int n1_;
  int n2_;
  void* buffer_;
  void* forward_plan_;
  void* inverse_plan_;
};

FftPlan2d& fft_plan_for(int n1, int n2);

}  // namespace mhd
