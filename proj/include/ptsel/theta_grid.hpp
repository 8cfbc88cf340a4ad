#pragma once

#include "ptsel/grid.hpp"
#include "ptsel/kernel_param.hpp"

#include <string>
#include <vector>

namespace ptsel {

/// Parameters of a finite Theta discretization.
struct FamilySpec
{
  Family family = Family::general;
  int dim = 1;
  double h_min = 0.05;
  double h_max = 0.5;
  Profile profile = Profile::triweight;
  int order = 0;
  /// Largest allowed ratio of consecutive sigma-tilde values along a grid line.
  double sigma_ratio = 1.189207115002721; // 2^{1/4}
  /// Angle count ceil(pi * angle_density / h_min), capped at max_angles.
  double angle_density = 0.25;
  int max_angles = 64;
  int n_angles = 0; // > 0 overrides the rule above
  /// Anisotropic family: prod h_i^gamma = phi.
  double gamma = 1.0;
  double phi = 0.0;
};

/// Finite Theta with precomputed sigma-tilde values and level structure.
class ThetaGrid
{
public:
  ThetaGrid() = default;
  explicit ThetaGrid(FamilySpec spec, std::vector<KernelParam> params);

  const FamilySpec& spec() const { return spec_; }
  std::size_t size() const { return params_.size(); }
  const KernelParam& operator[](std::size_t i) const { return params_[i]; }
  const std::vector<KernelParam>& params() const { return params_; }
  const BaseKernelPtr& base() const { return base_; }

  double sigma_tilde(std::size_t mu) const { return sigma_tilde_[mu]; }
  const std::vector<double>& sigma_tildes() const { return sigma_tilde_; }
  double sigma(std::size_t mu) const { return sigma_[mu]; }
  /// Sorted distinct sigma-tilde values.
  const std::vector<double>& levels() const { return levels_; }
  std::size_t level_of(std::size_t mu) const { return level_of_[mu]; }
  double sigma_min() const { return levels_.front(); }
  double sigma_max() const { return levels_.back(); }
  /// sup_mu ||K_mu||_{1,infty} and sup_mu ||K_mu||_{2,infty}.
  double M_K() const { return M_K_; }
  double sigma_K() const { return sigma_K_; }

  /// Indices sorted by (sigma-tilde, h..., angle), the deterministic order.
  const std::vector<std::size_t>& canonical_order() const { return order_; }
  /// True if a precedes b in the canonical order.
  bool precedes(std::size_t a, std::size_t b) const;

private:
  FamilySpec spec_;
  BaseKernelPtr base_;
  std::vector<KernelParam> params_;
  std::vector<double> sigma_, sigma_tilde_, levels_;
  std::vector<std::size_t> level_of_, order_, rank_;
  double M_K_ = 1.0;
  double sigma_K_ = 0.0;
};

/// Geometric bandwidth ladder h_max * q^k, k = 0..K, hitting h_min exactly,
/// with q >= min_ratio.
std::vector<double> geometric_ladder(double h_min, double h_max, double min_ratio);

ThetaGrid make_theta_grid(const FamilySpec& spec);
ThetaGrid make_singleton_theta(const KernelParam& mu);
ThetaGrid make_theta_from_params(const FamilySpec& spec,
                                 std::vector<KernelParam> params);

/// Throws if mu violates the family constraints of spec.
void validate_param(const KernelParam& mu, const FamilySpec& spec);

/// Grid margin that holds every auxiliary kernel support for x in D0:
/// 2 max_mu max_i sum_j |E_ij| h_j times the base support radius.
double theta_margin(const ThetaGrid& theta);

/// Closed form ||G||_1 sigma_mu.
double sigma_tilde(const KernelParam& mu);

/// max(sup_nu sum_k |w_nu[k]| sigma_mu, sigma_mu) with sigma_mu and the L1
/// masses computed by cell sums on the grid.
double sigma_tilde_quadrature(const KernelParam& mu, const ThetaGrid& theta,
                              const Grid& grid);

} // namespace ptsel
