#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pulsenoise {

/// Real-to-complex forward transform of a fixed length. Owns an FFTW plan;
/// the plan is created with FFTW_ESTIMATE so results do not depend on timing.
class RealFft {
 public:
  explicit RealFft(std::size_t length);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t length() const { return length_; }

  /// Unnormalized transform: X_k = sum_n x_n exp(-2 pi i k n / N),
  /// k = 0 .. N/2.
  std::vector<std::complex<double>> forward(std::span<const double> input);

 private:
  void release();

  std::size_t length_ = 0;
  double* in_ = nullptr;
  void* out_ = nullptr;
  void* plan_ = nullptr;
};

/// Convenience wrapper for one-off transforms.
std::vector<std::complex<double>> real_fft(std::span<const double> input);

}  // namespace pulsenoise
