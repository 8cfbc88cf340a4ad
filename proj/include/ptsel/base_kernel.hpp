#pragma once

#include "ptsel/grid.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ptsel {

/// Even 1-D profiles k on [-1, 1] with unit mass.
enum class Profile
{
  box_smooth, // flat on |u| <= 1/2, smoothstep shoulder to 0 at |u| = 1
  quartic,
  triweight,
};

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile p);

namespace profile {
double value(Profile p, double u);
double derivative(Profile p, double u);
double max_value(Profile p);
double max_derivative(Profile p);
/// Breakpoints of the piecewise-polynomial profile in (0, 1).
std::vector<double> breakpoints(Profile p);
} // namespace profile

/// G(t) = sum_j weight_j prod_i k(t_i / scale_j) / scale_j.
/// Every factor is a unit-mass density, so the integral of G is sum_j weight_j.
struct KernelTerm
{
  double weight;
  double scale;
};

/// Base kernel on [-1/2, 1/2]^d with vanishing moments up to its order.
class BaseKernel
{
public:
  int dim() const { return d_; }
  int order() const { return order_; }
  Profile profile() const { return profile_; }
  double support_radius() const { return support_radius_; }
  const std::vector<KernelTerm>& terms() const { return terms_; }

  /// Coefficients c_j of the expansion sum_j c_j g(t / j), g = G for order 0.
  std::vector<double> g_coefficients() const;

  double operator()(const Point& t) const;
  Point gradient(const Point& t) const;
  /// One factor k(u / scale) / scale of term j.
  double factor(std::size_t j, double u) const;
  double factor_derivative(std::size_t j, double u) const;

  double norm_l1() const { return norm_l1_; }
  double norm_l2() const { return norm_l2_; }
  /// Upper bound on sup |grad G|_2.
  double grad_bound() const { return grad_bound_; }

  /// Integral of prod_i t_i^{r_i} G(t) by exact piecewise Gauss quadrature.
  double moment(const std::array<int, kMaxDim>& r) const;

  std::string id() const;

  friend std::shared_ptr<const BaseKernel>
  make_base_kernel_from_terms(Profile, int, int, std::vector<KernelTerm>);

private:
  BaseKernel() = default;

  int d_ = 1;
  int order_ = 0;
  Profile profile_ = Profile::triweight;
  std::vector<KernelTerm> terms_;
  double support_radius_ = 0.5;
  double norm_l1_ = 1.0;
  double norm_l2_ = 1.0;
  double grad_bound_ = 0.0;
  bool custom_ = false;
};

using BaseKernelPtr = std::shared_ptr<const BaseKernel>;

/// Order 0: G(t) = prod_i 2 k(2 t_i). Order l >= 1: the alternating
/// binomial combination of J = l + 1 dilations of g, g rescaled to [-1/(2J), 1/(2J)]^d.
BaseKernelPtr make_base_kernel(Profile g, int d, int order);

/// User-supplied term list; throws if support exceeds the unit cube or any
/// moment of order <= order fails the check.
BaseKernelPtr make_base_kernel_from_terms(Profile g, int d, int order,
                                          std::vector<KernelTerm> terms);

struct MomentViolation
{
  std::array<int, kMaxDim> multi_index{0, 0, 0};
  double value = 0.0;
};

struct MomentReport
{
  double mass_error = 0.0;   // |int G - 1|
  double max_moment = 0.0;   // max |int t^r G| over 1 <= |r| <= order
  std::vector<MomentViolation> violations;
  bool ok() const { return violations.empty(); }
};

MomentReport validate_moments(const BaseKernel& G, int order,
                              double mass_tol = 1e-8, double moment_tol = 1e-6);

/// Integral over R of factor_a * factor_b (exact for polynomial profiles).
double factor_product_integral(Profile p, double scale_a, double scale_b);

} // namespace ptsel
