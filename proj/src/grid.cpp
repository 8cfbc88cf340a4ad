#include "ptsel/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ptsel {

Grid::Grid(int d, long n, double margin)
  : d_(d)
  , n_(n)
  , margin_(margin)
{
  spacing_ = (1.0 + 2.0 * margin) / static_cast<double>(n);
  cell_volume_ = std::pow(spacing_, d);
  size_ = 1;
  for (int i = 0; i < d; ++i)
    size_ *= static_cast<std::size_t>(n);
  coords_.resize(static_cast<std::size_t>(n));
  // symmetric by construction: coord(i) = -coord(n - 1 - i)
  for (long i = 0; i < n; ++i) {
    double c = (i + 0.5 - 0.5 * n) * spacing_;
    coords_[static_cast<std::size_t>(i)] = c;
  }
}

Index Grid::unflatten(std::size_t flat) const
{
  Index idx{0, 0, 0};
  for (int i = d_ - 1; i >= 0; --i) {
    idx[i] = static_cast<long>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
  return idx;
}

std::size_t Grid::flatten(const Index& idx) const
{
  std::size_t flat = 0;
  for (int i = 0; i < d_; ++i)
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[i]);
  return flat;
}

Point Grid::point(const Index& idx) const
{
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < d_; ++i)
    p[i] = coords_[static_cast<std::size_t>(idx[i])];
  return p;
}

bool Grid::contains(const Index& idx) const
{
  for (int i = 0; i < d_; ++i)
    if (idx[i] < 0 || idx[i] >= n_)
      return false;
  return true;
}

Index Grid::nearest_node(const Point& x) const
{
  Index idx{0, 0, 0};
  for (int i = 0; i < d_; ++i) {
    double u = (x[i] + half_extent()) / spacing_ - 0.5;
    long k = static_cast<long>(std::ceil(u - 0.5));
    idx[i] = std::clamp(k, 0L, n_ - 1);
  }
  return idx;
}

std::vector<double> Grid::d0_weights() const
{
  std::vector<double> axis(static_cast<std::size_t>(n_));
  for (long i = 0; i < n_; ++i) {
    double lo = -half_extent() + i * spacing_;
    double hi = lo + spacing_;
    double ov = std::min(hi, 0.5) - std::max(lo, -0.5);
    axis[static_cast<std::size_t>(i)] = ov > 0 ? ov / spacing_ : 0.0;
  }
  std::vector<double> w(size_);
  for (std::size_t f = 0; f < size_; ++f) {
    Index idx = unflatten(f);
    double v = 1.0;
    for (int i = 0; i < d_; ++i)
      v *= axis[static_cast<std::size_t>(idx[i])];
    w[f] = v;
  }
  return w;
}

std::vector<std::size_t> Grid::d0_nodes() const
{
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < size_; ++f) {
    Point p = point(f);
    bool in = true;
    for (int i = 0; i < d_; ++i)
      in = in && std::abs(p[i]) <= 0.5 + 1e-12;
    if (in)
      out.push_back(f);
  }
  return out;
}

Grid make_grid(int d, long n, double margin, std::size_t max_cells)
{
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("make_grid: dimension must be 1..3, got " +
                                std::to_string(d));
  if (n < 1)
    throw std::invalid_argument("make_grid: n must be positive");
  if (!(margin >= 0.0) || !std::isfinite(margin))
    throw std::invalid_argument("make_grid: margin must be finite and >= 0");
  double cells = std::pow(static_cast<double>(n), d);
  if (cells > static_cast<double>(max_cells))
    throw std::length_error("make_grid: " + std::to_string(n) + "^" +
                            std::to_string(d) + " cells exceed the cap of " +
                            std::to_string(max_cells));
  return Grid(d, n, margin);
}

} // namespace ptsel
