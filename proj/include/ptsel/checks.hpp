#pragma once

#include "ptsel/comparison.hpp"
#include "ptsel/majorant.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptsel {

struct CheckResult
{
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0; // 0 = no runtime limit
};

/// "PASS [3] name: detail (1.2 s)"
std::string format_check(const CheckResult& c);

/// Moments, mass and support of every bundled base kernel for orders 0..4, d = 1..3.
CheckResult check_kernel_validity();
/// B_{mu,nu} - B_nu against the smoothed bias of mu on random functions, kernels and points.
CheckResult check_aux_bias_identity(std::uint64_t seed, int cases = 50);
/// Auxiliary-kernel commutativity and two-stage versus direct auxiliary estimates.
CheckResult check_aux_kernels(std::uint64_t seed, int pairs = 20);
/// Closed-form sigma, sigma-tilde and family extrema against grid quadrature.
CheckResult check_closed_forms(long n = 128);
/// Borell-TIS, the moment bound and the tail bound of the comparison process.
CheckResult check_concentration(std::uint64_t seed, int reps = 2000);
/// Exact semi-metric versus its two upper bounds on random quadruples.
CheckResult check_semimetric(std::uint64_t seed, int pairs = 50);

/// The six suites above in order.
std::vector<CheckResult> run_invariant_checks(std::uint64_t seed, int concentration_reps = 2000);

/// One probe of the concentration suite.
struct ConcentrationProbe
{
  std::string kind;     // "borell-tis", "moment", "tail"
  std::size_t mu = 0;
  double at = 0.0;      // u, r or t
  double empirical = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool ok() const { return empirical - 4.0 * se <= bound; }
};

/// Probes at u in {1, 2, 3} sigma_T, r in {1, 2, 4} and t in {0, 1, 2} sigma-tilde_mu
/// for each mu in mus; e is estimated from an independent pass with the same reps.
std::vector<ConcentrationProbe> concentration_probes(const ComparisonEngine& engine,
                                                     const std::vector<std::size_t>& mus,
                                                     int reps, std::uint64_t seed);

/// C_r of the moment bound: 1 for r <= 1, else [8r int_0^inf (t v 1)^{r-1} e^{-t^2/2} dt]^{1/r}.
double moment_constant(double r);

} // namespace ptsel
