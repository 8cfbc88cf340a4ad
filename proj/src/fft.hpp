#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace ptsel::detail {

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
std::size_t nice_fft_size(std::size_t n);

struct FftwFree
{
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n)
{
  return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * (n ? n : 1))));
}

/// Real-to-complex transform pair on a fixed row-major shape.
class RealFft
{
public:
  RealFft(int d, std::array<int, 3> n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  const std::array<int, 3>& shape() const { return n_; }
  int dim() const { return d_; }

  /// in: real_size doubles; out: complex_size values. Buffers from fftw_buffer.
  void forward(double* in, fftw_complex* out) const;
  /// Unnormalized inverse; destroys in.
  void inverse(fftw_complex* in, double* out) const;

private:
  int d_;
  std::array<int, 3> n_;
  std::size_t real_size_ = 1, complex_size_ = 1;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

} // namespace ptsel::detail
