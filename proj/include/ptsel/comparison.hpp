#pragma once

#include "ptsel/grid.hpp"
#include "ptsel/linear_est.hpp"
#include "ptsel/stencil.hpp"
#include "ptsel/theta_grid.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace ptsel {

/// All single and auxiliary estimates at one node.
struct EstimateTable
{
  Index node{0, 0, 0};
  Eigen::VectorXd single; // single(nu) = F-hat_nu(x)
  Eigen::MatrixXd pair;   // pair(mu, nu) = F-hat_{mu,nu}(x)
};

/// Computes EstimateTables for every (mu, nu) of a ThetaGrid.
///
/// The data patch around the query nodes is transformed once; each Z_mu is one
/// inverse FFT, and all F-hat_{mu,nu}(x) = sum_j w_nu[j] Z_mu(x + j) come from a
/// single matrix product per node.
class ComparisonEngine
{
public:
  ComparisonEngine(const ThetaGrid& theta, const Grid& grid);
  ~ComparisonEngine();

  const ThetaGrid& theta() const { return theta_; }
  const Grid& grid() const { return grid_; }
  const Stencil& stencil(std::size_t mu) const { return stencils_[mu]; }
  /// Per-axis maximum stencil radius over Theta.
  const Index& max_radius() const { return R_; }
  /// Margin needed so that every auxiliary kernel fits for x in D0.
  double required_margin() const;

  EstimateTable evaluate(std::span<const double> increments, const Index& node) const;
  std::vector<EstimateTable> evaluate(std::span<const double> increments,
                                      const std::vector<Index>& nodes) const;

private:
  struct Spectra;
  const Spectra& spectra_for(const std::array<int, 3>& shape) const;

  ThetaGrid theta_;
  Grid grid_;
  std::vector<Stencil> stencils_;
  Index R_{0, 0, 0};
  Eigen::MatrixXd wmat_; // |Theta| x window, rows = stencils embedded in the R box
  mutable std::mutex mtx_;
  mutable std::map<std::array<int, 3>, std::unique_ptr<Spectra>> spectra_;
};

} // namespace ptsel
