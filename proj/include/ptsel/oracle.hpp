#pragma once

#include "ptsel/comparison.hpp"
#include "ptsel/majorant.hpp"
#include "ptsel/test_function.hpp"
#include "ptsel/theta_grid.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptsel {

/// sum_k w_mu[k] F(y + k spacing) - F(y): the bias of the lattice estimator at y.
/// Throws std::out_of_range if the stencil leaves D.
double bias(const TestFunction& F, const KernelParam& mu, const Point& y, const Grid& grid);

struct AuxBiasDelta
{
  double direct = 0.0;   // B_{mu,nu}(x) - B_nu(x) via the auxiliary kernel
  double smoothed = 0.0; // sum_j w_nu[j] B_mu(x + j spacing)
};

AuxBiasDelta bias_aux_delta(const TestFunction& F, const KernelParam& mu,
                            const KernelParam& nu, const Point& x, const Grid& grid);

/// max_nu |B_{mu,nu}(x) - B_nu(x)| max |B_mu(x)| by direct lattice sums; mu need
/// not belong to theta.
double integrated_bias(const TestFunction& F, const KernelParam& mu, const ThetaGrid& theta,
                       const Point& x, const Grid& grid);

struct OracleReport
{
  double eps = 0.0;
  Point x{0, 0, 0};
  Index node{0, 0, 0};
  std::string theta_id;
  std::vector<double> bias;     // B_mu(x)
  std::vector<double> int_bias; // B-tilde_mu(x)
  std::vector<bool> good;       // B-tilde_mu <= eps Q(sigma-tilde_mu) / 4
  std::vector<bool> member;     // mu in Theta_F
  std::optional<std::size_t> mu_star;
  double bound = 0.0; // eps Q(sigma-tilde_{mu*}), 0 when Theta_F is empty
};

/// B_mu and B-tilde_mu at the node of x from the noiseless estimate table.
void oracle_biases(std::span<const double> signal, const TestFunction& F,
                   const ComparisonEngine& engine, const Index& node,
                   std::vector<double>& b, std::vector<double>& bt);

/// Theta_F from integrated biases: mu is a member iff every level >= its own
/// has some theta with B-tilde_theta <= eps Q(sigma-tilde_theta) / 4.
/// mu* is the first member in canonical order.
void theta_F(const ThetaGrid& theta, std::span<const double> int_bias,
             std::span<const double> eps_q, std::vector<bool>& good,
             std::vector<bool>& member, std::optional<std::size_t>& mu_star);

OracleReport oracle_report(std::span<const double> signal, const TestFunction& F,
                           const ComparisonEngine& engine, const MajorantSpec& spec,
                           double eps, const Point& x);

/// Reports for several x at once.
std::vector<OracleReport> oracle_reports(std::span<const double> signal, const TestFunction& F,
                                         const ComparisonEngine& engine,
                                         const MajorantSpec& spec, double eps,
                                         const std::vector<Point>& xs);

void write_oracle_json(std::ostream& os, const OracleReport& r, const ThetaGrid& theta);

/// One quadruple (mu, nu), (mu', nu') of the comparison process.
struct SemimetricCase
{
  std::size_t mu, nu, mu2, nu2;
  double exact = 0.0;        // ||(K_{nu,mu} - K_nu) - (K_{nu',mu'} - K_nu')||_2
  double general = 0.0;      // right side of the two-term bound with lattice norms
  double parametric = -1.0;  // bandwidth/rotation bound, only when mu == mu'
};

struct SemimetricReport
{
  std::vector<SemimetricCase> cases;
  double max_excess_general = 0.0;    // max (exact - bound) / bound
  double max_excess_parametric = 0.0;
};

/// Exact semi-metric on the lattice versus its two upper bounds:
///   2 st_nu [rb + ru](nu, nu') + st_mu [rb + ru](mu, mu'),
///   2 st_nu {M |1 - h/h'|_2 + 2 |1 - prod h'/h| + M d h_min^{-1} |E - E'|_F},
/// with rb the normalized-kernel L2 distance, ru = |1 - sigma/sigma'| and st = sigma-tilde.
SemimetricReport semimetric_check(const ThetaGrid& theta,
                                  const std::vector<std::array<std::size_t, 4>>& quads,
                                  const Grid& grid);

} // namespace ptsel
