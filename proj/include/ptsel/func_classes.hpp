#pragma once

#include "ptsel/test_function.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ptsel {

enum class HolderShape
{
  cusp, // L |t - t0|^alpha, alpha in (0, 1]
  trig, // short cosine series
};

HolderShape parse_shape(std::string_view s);

/// Largest integer strictly below alpha.
int floor_strict(double alpha);

/// Member of H_1(alpha, L). seed 0 puts the cusp at 0 and uses zero phases;
/// other seeds randomize them. Throws std::invalid_argument for alpha > 1 with
/// the cusp shape or non-positive alpha / negative L.
TestFunction make_holder_1d(double alpha, double L, HolderShape shape, std::uint64_t seed = 0);

/// F(t) = f(omega^T t); omega must be a unit vector within 1e-12.
TestFunction make_single_index(const TestFunction& f, const std::vector<double>& omega);

/// F(t) = sum_i f_i(t_i), f_i in H_1(alpha_i, L / d); cusp for alpha_i <= 1, trig otherwise.
TestFunction make_aniso_holder(const std::vector<double>& alpha, double L, std::uint64_t seed = 0);

/// gamma with sum 1/alpha_i = 1/gamma.
double aniso_gamma(const std::vector<double>& alpha);

/// Multiscale smooth bumps with amplitudes 2^{-j(s - d/p)}, rescaled so that the
/// Besov functional on the probe set is at most L. Requires s > d/p.
TestFunction make_besov(int d, double s, double p, double L, std::uint64_t seed = 0,
                        int probe_resolution = 128);

/// Coefficients c_j of Delta_a^l F(x) = sum_{j=0}^{l} c_j F(x + j a): (l choose j)(-1)^{l-j}.
std::vector<double> iterated_difference_coefficients(int l);

struct MembershipReport
{
  FunctionClass cls = FunctionClass::custom;
  double constant = 0.0; // empirical class constant
  double L = 0.0;
  bool pass = false;     // constant <= L (1 + slack)
  std::vector<double> per_axis;
};

/// Empirical class constant on a probe grid with `resolution` nodes per axis
/// (>= 128) and log-spaced shifts |a| in [2 / resolution, 0.25] keeping the
/// arguments inside D0. Besov functionals use directions on a half circle in d = 2.
MembershipReport verify_membership(const TestFunction& F, int resolution = 128,
                                   double slack = 0.05);

/// Besov functional sup_a |a|^{-s} || Delta_a^{l} F ||_p over D0 with l = floor_strict(s) + 2.
double besov_functional(const TestFunction& F, int d, double s, double p, int resolution = 128);

/// Generator parameters addressable from configuration files.
struct FunctionSpec
{
  std::string kind = "cusp"; // constant, cusp, trig, single_index, aniso, besov
  int dim = 1;
  double alpha = 1.0;
  std::vector<double> alpha_vec;
  double L = 1.0;
  std::vector<double> omega;
  double s = 1.0;
  double p = 2.0;
  double value = 0.0; // constant
  std::string inner = "cusp"; // 1-D shape of single_index
  std::uint64_t seed = 0;
};

TestFunction make_function(const FunctionSpec& spec);

} // namespace ptsel
