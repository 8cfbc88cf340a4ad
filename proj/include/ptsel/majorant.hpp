#pragma once

#include "ptsel/comparison.hpp"
#include "ptsel/theta_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ptsel {

enum class MajorantVariant
{
  general,      // kappa0 e(sigma) + sigma sqrt(1 + kappa1 ln(sigma / sigma_min))
  single_index, // sigma [kappa0 C0 sqrt(ln sigma) + sqrt(1 + kappa1 ln(sigma / sigma_min))]
  aniso_holder, // sigma [1 + 4 C1 sqrt(ln ln(h_max / h_min))]
  besov,        // C sigma sqrt(1 + kappa1 ln(sigma / sigma_min))
  mixed,        // C2 sigma sqrt(1 + ln(1 / eps))
};

MajorantVariant parse_variant(std::string_view name);
std::string_view to_string(MajorantVariant v);

/// Monte Carlo estimate of the expected comparison supremum per sigma level.
struct ETable
{
  std::vector<double> sigma;
  std::vector<double> e_raw; // before isotonic adjustment
  std::vector<double> e_hat; // non-decreasing
  std::vector<double> se;
  std::vector<double> bound; // calibrated analytic bound, empty until calibrated
  int reps = 0;
  std::uint64_t seed = 0;
  bool se_warning = false;
  std::string source = "mc";
};

/// Calls fn(rep, table) for `reps` pure-noise fields (eps = 1) at `node`.
void for_each_noise_table(const ComparisonEngine& engine, int reps, std::uint64_t seed,
                          const Index& node,
                          const std::function<void(int, const EstimateTable&)>& fn);

/// For each level sigma: max over mu of the MC mean of
/// max_{nu: sigma_nu <= sigma} |xi_{mu,nu} - xi_nu| at the centre node.
/// se_warning is set when reps < 100 or some relative s.e. exceeds target_rel_se.
ETable e_mc(const ComparisonEngine& engine, int reps, std::uint64_t seed,
            double target_rel_se = 0.05);

/// Pool-adjacent-violators fit of a non-decreasing sequence.
std::vector<double> isotonic_increasing(const std::vector<double>& y,
                                        const std::vector<double>& w = {});

/// Shape parameters of the entropy-type bounds.
struct BoundCalibration
{
  MajorantVariant variant = MajorantVariant::general;
  double C = 1.0;
  double sigma_min = 1.0;
  double sigma_max = 1.0;
  double h_ratio = 0.0; // h_max / h_min, anisotropic variant
  double eps = 0.0;     // mixed variant
  double floor = 0.0;   // shape floor, sigma_min after calibration
};

/// Bound shape without its constant:
/// single-index sigma sqrt(ln sigma); anisotropic sigma (sqrt(ln ln(h_max/h_min)) + 1);
/// Besov sigma sqrt(ln(1 + ln(sigma/sigma_min))); mixed sigma sqrt(1 + ln(1/eps));
/// general sigma sqrt(1 + ln(sigma/sigma_min)).
double e_shape(MajorantVariant v, double sigma, const BoundCalibration& calib);

/// C * max(shape(sigma), floor); throws std::domain_error outside the bound's
/// preconditions.
double e_bound(MajorantVariant v, double sigma, const BoundCalibration& calib);

/// C = 1.1 max over levels of e_hat / max(shape, floor). Fills table.bound.
BoundCalibration calibrate_bound(MajorantVariant v, ETable& table, const ThetaGrid& theta,
                                 double eps = 0.0);

/// Function sigma -> e(sigma) with a description of where it came from.
struct EFunction
{
  std::function<double(double)> f;
  std::string source;
  double operator()(double s) const { return f(s); }
};

/// Piecewise-linear interpolation of e_hat; proportional to sigma outside the table.
EFunction e_from_table(const ETable& table);

struct ECondition
{
  bool ok = false;
  bool vacuous = false; // no level pair (sigma, 2 sigma) inside the range
  double c_e = 0.0;
  double C_e = 0.0;
  double worst_sigma = 0.0; // level with the smallest doubling ratio
};

/// Doubling ratios e(2 sigma) / e(sigma) over levels with 2 sigma <= sigma_max.
ECondition check_E_condition(const EFunction& e, const std::vector<double>& levels);

struct MajorantSpec
{
  MajorantVariant variant = MajorantVariant::general;
  EFunction e;
  std::string e_source;
  bool fallback_used = false;
  double c_e = 2.0, C_e = 2.0;
  double kappa0 = 4.0, kappa1 = 128.0;
  double sigma_min = 1.0, sigma_max = 1.0;
  int r = 2;
  double C_variant = 1.0; // C0 / C1 / Besov constant / C2
  double h_ratio = 0.0;
  double eps = 0.0;
};

/// kappa0 = 2 C_e, kappa1 = 128 r max(1, ln C_e / ln 2).
void set_general_kappas(MajorantSpec& spec);

/// Builds the majorant of a variant from an ETable: calibrates the variant
/// constant, verifies the doubling condition and falls back to
/// e(sigma) = c sigma sqrt(1 + ln(sigma / sigma_min)) if it fails.
MajorantSpec make_majorant(MajorantVariant v, ETable& table, const ThetaGrid& theta,
                           int r = 2, double eps = 0.0);

double majorant_Q(double sigma, const MajorantSpec& spec);

void write_etable_csv(const std::filesystem::path& path, const ETable& t);
ETable read_etable_csv(const std::filesystem::path& path);

} // namespace ptsel
