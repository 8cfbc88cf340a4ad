#pragma once

#include "ptsel/grid.hpp"
#include "ptsel/kernel_param.hpp"

#include <vector>

namespace ptsel {

/// Rank-one piece of a separable stencil: coef * prod_i axis[i][k_i + r_i].
struct SeparableTerm
{
  double coef = 0.0;
  std::array<std::vector<double>, kMaxDim> axis;
};

/// Kernel weights on the lattice offsets k in the box [-r, r], row-major.
/// Weight w[k] multiplies the increment at x + k*spacing. Weights sum to 1.
struct Stencil
{
  int dim = 1;
  Index radius{0, 0, 0};
  std::vector<double> w;
  /// Exact factorization of w when E = I; empty otherwise.
  std::vector<SeparableTerm> separable;

  long extent(int i) const { return i < dim ? 2 * radius[i] + 1 : 1; }
  std::size_t size() const { return w.size(); }
  std::size_t offset_index(const Index& k) const;
  Index offset(std::size_t flat) const;
  /// Weight at offset k; 0 outside the box.
  double at(const Index& k) const;
  long max_radius() const;
};

/// Weights [prod h_i^{-1}] G(E^T k spacing / h) spacing^d, renormalized to sum 1.
Stencil tabulate_stencil(const KernelParam& mu, double spacing);

/// Discrete convolution (a * b)[m] = sum_j a[j] b[m - j].
Stencil convolve_stencils(const Stencil& a, const Stencil& b);

/// Embed s into a box of the given radius (must contain s).
std::vector<double> embed_stencil(const Stencil& s, const Index& radius);

/// max_k |a[k] - b[k]| over the union of both boxes.
double max_abs_difference(const Stencil& a, const Stencil& b);

/// Auxiliary kernel K_{mu,nu}(t, x), tabulated as a translation-invariant profile.
struct AuxKernel
{
  KernelParam mu;
  KernelParam nu;
  Stencil profile;
  double spacing = 0.0;

  /// Density value at t - x snapped to the lattice.
  double operator()(const Point& t, const Point& x) const;
};

/// Throws std::out_of_range naming the required margin when the auxiliary
/// support does not fit into the grid margin.
AuxKernel convolve_kernels(const KernelParam& mu, const KernelParam& nu,
                           const Grid& grid);

/// Required margin (length units) for a stencil radius on the grid.
double required_margin(long radius, const Grid& grid);

} // namespace ptsel
