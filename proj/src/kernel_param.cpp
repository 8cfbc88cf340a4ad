#include "ptsel/kernel_param.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ptsel {

Family parse_family(std::string_view name)
{
  if (name == "general")
    return Family::general;
  if (name == "si" || name == "single-index" || name == "single_index")
    return Family::single_index;
  if (name == "ah" || name == "aniso" || name == "aniso-holder")
    return Family::aniso_holder;
  if (name == "besov" || name == "isotropic")
    return Family::besov;
  if (name == "mixed")
    return Family::mixed;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(Family f)
{
  switch (f) {
  case Family::general:
    return "general";
  case Family::single_index:
    return "si";
  case Family::aniso_holder:
    return "ah";
  case Family::besov:
    return "besov";
  case Family::mixed:
    return "mixed";
  }
  return "?";
}

bool family_rotates(Family f, int d)
{
  return d == 2 &&
         (f == Family::general || f == Family::single_index || f == Family::mixed);
}

Matrix3 KernelParam::rotation() const
{
  Matrix3 E{};
  for (int i = 0; i < kMaxDim; ++i)
    E[i][i] = 1.0;
  if (dim == 2) {
    double c = std::cos(angle), s = std::sin(angle);
    E[0][0] = c;
    E[0][1] = -s;
    E[1][0] = s;
    E[1][1] = c;
  }
  return E;
}

double KernelParam::bandwidth_volume() const
{
  double v = 1.0;
  for (int i = 0; i < dim; ++i)
    v *= h[i];
  return v;
}

std::string KernelParam::describe() const
{
  std::ostringstream os;
  os << to_string(family) << " h=(";
  for (int i = 0; i < dim; ++i)
    os << (i ? "," : "") << h[i];
  os << ")";
  if (dim == 2)
    os << " angle=" << angle;
  return os.str();
}

double eval_kernel(const KernelParam& mu, const Point& t, const Point& x)
{
  int d = mu.dim;
  Matrix3 E = mu.rotation();
  Point z{0.0, 0.0, 0.0};
  for (int j = 0; j < d; ++j) {
    double v = 0.0;
    for (int i = 0; i < d; ++i)
      v += E[i][j] * (t[i] - x[i]);
    z[j] = v / mu.h[j];
  }
  return (*mu.base)(z) / mu.bandwidth_volume();
}

KernelNorms kernel_norms(const KernelParam& mu)
{
  return {mu.base->norm_l1(), mu.base->norm_l2() / std::sqrt(mu.bandwidth_volume())};
}

KernelNorms kernel_norms_quadrature(const KernelParam& mu, const Grid& grid)
{
  int d = mu.dim;
  double D = grid.spacing();
  // the support of G_{h,E} lies in the ball of radius |h|_2 / 2
  double R = 0.0;
  for (int i = 0; i < d; ++i)
    R += mu.h[i] * mu.h[i];
  long r = static_cast<long>(std::ceil(0.5 * std::sqrt(R) / D)) + 1;
  Point x{0.0, 0.0, 0.0};
  double l1 = 0.0, l2 = 0.0;
  Index k{0, 0, 0};
  for (k[0] = -r; k[0] <= r; ++k[0])
    for (k[1] = (d > 1 ? -r : 0); k[1] <= (d > 1 ? r : 0); ++k[1])
      for (k[2] = (d > 2 ? -r : 0); k[2] <= (d > 2 ? r : 0); ++k[2]) {
        Point t{k[0] * D, k[1] * D, k[2] * D};
        double v = eval_kernel(mu, t, x);
        l1 += std::abs(v);
        l2 += v * v;
      }
  double vol = grid.cell_volume();
  return {l1 * vol, std::sqrt(l2 * vol)};
}

double rotation_distance(const KernelParam& a, const KernelParam& b)
{
  Matrix3 A = a.rotation(), B = b.rotation();
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j)
      s += (A[i][j] - B[i][j]) * (A[i][j] - B[i][j]);
  return std::sqrt(s);
}

} // namespace ptsel
