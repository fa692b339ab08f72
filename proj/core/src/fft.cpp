#include "pulsenoise/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace pulsenoise {

RealFft::RealFft(std::size_t length) : length_(length) {
  if (length < 2) throw std::invalid_argument("RealFft: length must be >= 2");
  in_ = fftw_alloc_real(length);
  out_ = fftw_alloc_complex(length / 2 + 1);
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(length), in_,
                               static_cast<fftw_complex*>(out_), FFTW_ESTIMATE);
  if (!in_ || !out_ || !plan_) {
    release();
    throw std::runtime_error("RealFft: FFTW allocation failed");
  }
}

RealFft::~RealFft() { release(); }

void RealFft::release() {
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  if (in_) fftw_free(in_);
  if (out_) fftw_free(out_);
  plan_ = nullptr;
  in_ = nullptr;
  out_ = nullptr;
}

RealFft::RealFft(RealFft&& other) noexcept
    : length_(std::exchange(other.length_, 0)),
      in_(std::exchange(other.in_, nullptr)),
      out_(std::exchange(other.out_, nullptr)),
      plan_(std::exchange(other.plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    std::swap(length_, other.length_);
    std::swap(in_, other.in_);
    std::swap(out_, other.out_);
    std::swap(plan_, other.plan_);
  }
  return *this;
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> input) {
  if (input.size() != length_) throw std::invalid_argument("RealFft: input length mismatch");
  std::copy(input.begin(), input.end(), in_);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* out = static_cast<const fftw_complex*>(out_);
  std::vector<std::complex<double>> result(length_ / 2 + 1);
  for (std::size_t k = 0; k < result.size(); ++k) result[k] = {out[k][0], out[k][1]};
  return result;
}

std::vector<std::complex<double>> real_fft(std::span<const double> input) {
  RealFft fft(input.size());
  return fft.forward(input);
}

}  // namespace pulsenoise
