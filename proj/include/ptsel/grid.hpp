#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ptsel {

inline constexpr int kMaxDim = 3;

/// Point in R^d; coordinates beyond the active dimension are ignored.
using Point = std::array<double, kMaxDim>;
/// Integer node index per axis; unused axes stay 0.
using Index = std::array<long, kMaxDim>;

/// Regular cell-centred grid on D = [-(1/2 + margin), 1/2 + margin]^d,
/// row-major (last axis fastest).
class Grid
{
public:
  Grid() = default;
  Grid(int d, long n, double margin);

  int dim() const { return d_; }
  long n() const { return n_; }
  double margin() const { return margin_; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }
  double half_extent() const { return 0.5 + margin_; }
  std::size_t size() const { return size_; }

  double coord(long i) const { return -half_extent() + (i + 0.5) * spacing_; }
  const std::vector<double>& coords() const { return coords_; }

  Index unflatten(std::size_t flat) const;
  std::size_t flatten(const Index& idx) const;
  Point point(const Index& idx) const;
  Point point(std::size_t flat) const { return point(unflatten(flat)); }

  bool contains(const Index& idx) const;
  /// Node closest to x (ties toward the lower index).
  Index nearest_node(const Point& x) const;

  /// Per-cell fraction of the cell lying inside D0 = [-1/2, 1/2]^d.
  std::vector<double> d0_weights() const;
  /// Indices of nodes whose coordinates lie in D0.
  std::vector<std::size_t> d0_nodes() const;

  bool operator==(const Grid& o) const
  {
    return d_ == o.d_ && n_ == o.n_ && margin_ == o.margin_;
  }

private:
  int d_ = 1;
  long n_ = 0;
  double margin_ = 0.0;
  double spacing_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
  std::vector<double> coords_;
};

/// Default cap on the number of cells of a grid (doubles per field).
inline constexpr std::size_t kDefaultMaxCells = std::size_t(1) << 26;

Grid make_grid(int d, long n, double margin,
               std::size_t max_cells = kDefaultMaxCells);

} // namespace ptsel
