#pragma once

#include "ptsel/base_kernel.hpp"
#include "ptsel/grid.hpp"

#include <array>
#include <string>
#include <string_view>

namespace ptsel {

enum class Family
{
  general, // H x E, full bandwidth box, rotations in d = 2
  single_index, // h = (h1, h_max, ..., h_max), rotations in d = 2
  aniso_holder, // prod h_i^gamma = phi, E = I
  besov, // equal bandwidths, E = I
  mixed, // general family built on a higher-order base kernel
};

Family parse_family(std::string_view name);
std::string_view to_string(Family f);
/// Whether members of the family carry a rotation angle (d = 2 only).
bool family_rotates(Family f, int d);

using Matrix3 = std::array<std::array<double, kMaxDim>, kMaxDim>;

/// One point mu = (h, E) of Theta.
struct KernelParam
{
  Family family = Family::general;
  int dim = 1;
  std::array<double, kMaxDim> h{1.0, 1.0, 1.0};
  double angle = 0.0; // d = 2 rotation angle in [0, pi); ignored otherwise
  BaseKernelPtr base;

  /// E with first column (cos angle, sin angle) for d = 2, identity otherwise.
  Matrix3 rotation() const;
  double bandwidth_volume() const; // prod h_i
  std::string describe() const;
};

/// [prod h_i^{-1}] G(E^T (t - x) / h).
double eval_kernel(const KernelParam& mu, const Point& t, const Point& x);

struct KernelNorms
{
  double l1 = 0.0; // ||K_mu(., x)||_1
  double l2 = 0.0; // sigma_mu = ||K_mu(., x)||_2
};

/// Closed forms ||G||_1 and ||G||_2 prod h_i^{-1/2}.
KernelNorms kernel_norms(const KernelParam& mu);

/// Cell-sum quadrature of the same norms on the grid (kernel centred at a node).
KernelNorms kernel_norms_quadrature(const KernelParam& mu, const Grid& grid);

/// Frobenius norm |E - E'|_2.
double rotation_distance(const KernelParam& a, const KernelParam& b);

} // namespace ptsel
