#include "fft.hpp"

#include <mutex>
#include <stdexcept>

namespace ptsel::detail {

namespace {
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}
} // namespace

std::size_t nice_fft_size(std::size_t n)
{
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u})
      while (r % p == 0)
        r /= p;
    if (r == 1)
      return m;
  }
}

RealFft::RealFft(int d, std::array<int, 3> n)
  : d_(d)
  , n_(n)
{
  for (int i = 0; i < d; ++i)
    real_size_ *= static_cast<std::size_t>(n[i]);
  complex_size_ = real_size_ / static_cast<std::size_t>(n[d - 1]) *
                  static_cast<std::size_t>(n[d - 1] / 2 + 1);
  auto in = fftw_buffer<double>(real_size_);
  auto out = fftw_buffer<fftw_complex>(complex_size_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c(d, n_.data(), in.get(), out.get(), FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r(d, n_.data(), out.get(), in.get(), FFTW_ESTIMATE);
  if (!fwd_ || !inv_)
    throw std::runtime_error("fftw: plan creation failed");
}

RealFft::~RealFft()
{
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_)
    fftw_destroy_plan(fwd_);
  if (inv_)
    fftw_destroy_plan(inv_);
}

void RealFft::forward(double* in, fftw_complex* out) const
{
  fftw_execute_dft_r2c(fwd_, in, out);
}

void RealFft::inverse(fftw_complex* in, double* out) const
{
  fftw_execute_dft_c2r(inv_, in, out);
}

} // namespace ptsel::detail
