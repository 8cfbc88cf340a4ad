#pragma once

#include "ptsel/func_classes.hpp"
#include "ptsel/majorant.hpp"
#include "ptsel/theta_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ptsel {

/// Log factor l(eps) of a rate; the fit regresses ln risk on ln(eps l(eps)).
enum class LogFactor
{
  none,
  sqrt_log,     // sqrt(ln(1/eps))
  sqrt_loglog,  // sqrt(ln ln(1/eps))
  besov,        // picked from (s, p, r, d), see besov_rate
};

LogFactor parse_log_factor(std::string_view s);
std::string_view to_string(LogFactor f);

/// One selector family run on the shared observations.
struct FamilyConfig
{
  std::string label = "main";
  FamilySpec spec;           // h_min, h_max, phi are set per eps from the rules below
  MajorantVariant variant = MajorantVariant::general;
  std::string h_min_rule = "eps2";  // "eps2" or a number
  std::string h_max_rule = "half";  // "half", "holder", "besov" or a number
  std::string phi_rule = "none";    // "aniso" for the anisotropic family
  double alpha_max = 1.0;           // used by the "holder" h_max rule
};

struct ExperimentConfig
{
  std::string name = "experiment";
  std::uint64_t seed = 1;
  int reps = 100;
  int r = 2;
  bool global = false;             // discrete L_r risk over the x grid
  std::filesystem::path out = "out";

  FunctionSpec function;
  std::vector<FamilyConfig> families; // first one is the main family

  std::string e_source = "mc";     // "mc" or "bound"
  int e_reps = 400;

  long n = 128;                    // cells per unit length (D0 resolution)
  Point x{0, 0, 0};
  int x_grid = 0;                  // nodes per axis of the global x grid
  double h_floor_cells = 3.0;      // h >= h_floor_cells / n

  std::vector<double> eps;         // strictly decreasing

  LogFactor log_factor = LogFactor::none;
  double target = 0.0;             // expected slope, 0 if none
  double tolerance = 0.0;
};

/// Parses an INI file; throws std::runtime_error with the path on failure.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& is, const std::string& origin = "<stream>");
/// Throws std::invalid_argument on violated invariants (eps order, reps, x in D0, ...).
void validate_config(const ExperimentConfig& cfg);

/// Family spec of fc at noise level eps on an n-grid.
FamilySpec family_at(const ExperimentConfig& cfg, const FamilyConfig& fc, double eps);

/// The sp vs d(r - p)/2 case: +1 dense, 0 boundary, -1 sparse.
int besov_case(double s, double p, int r, int d);
/// Exponent a and log power b of phi_eps = [eps l(eps)]^a [ln(1/eps)]^b for the
/// Besov rate, with l = 1 in the dense case and sqrt(ln(1/eps)) otherwise.
struct BesovRate
{
  int regime = 1;
  double exponent = 0.0;
  double log_power = 0.0;
};
BesovRate besov_rate(double s, double p, int r, int d);

struct RiskPoint
{
  double eps = 0.0;
  double risk = 0.0;
  double se = 0.0;
  double oracle = 0.0;     // eps Q(sigma-tilde_{mu*}), L_r-averaged over nodes when global
  bool oracle_defined = false; // Theta_F nonempty at every node
  double ratio = 0.0;      // risk / oracle
  int reps = 0;
  std::size_t theta_size = 0;
  double h_min = 0.0, h_max = 0.0;
  double mean_sigma_tilde = 0.0; // average sigma-tilde of the selected index
  std::string e_source;
  double C_variant = 0.0;
};

struct RateFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0; // 95% Student-t interval
  std::vector<double> x, y, residuals;
};

struct RiskReport
{
  std::string family;
  std::vector<RiskPoint> points;
  RateFit fit;
};

/// OLS of ln risk - b ln ln(1/eps) on ln(eps l(eps)); needs >= 4 points and
/// non-degenerate risks (std::invalid_argument otherwise). LogFactor::besov is
/// only accepted by the config overload.
RateFit rate_fit(const std::vector<double>& eps, const std::vector<double>& risk,
                 LogFactor lf, double log_power = 0.0);
/// Resolves the Besov case from the function parameters of cfg.
RateFit rate_fit(const RiskReport& report, const ExperimentConfig& cfg);
/// Log factor and log power actually used for cfg.
std::pair<LogFactor, double> resolved_log_factor(const ExperimentConfig& cfg);

struct RunOptions
{
  bool write = true;
  std::ostream* log = nullptr;
};

/// Monte Carlo risks of every configured family on shared observations.
std::vector<RiskReport> run_risks(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Pointwise risk at cfg.x, main family only.
RiskReport pointwise_risk(ExperimentConfig cfg);
/// Discrete L_r risk over the x grid (>= 32 nodes per axis), main family only.
RiskReport global_risk(ExperimentConfig cfg);

/// Full run writing artifacts under cfg.out; returns the reports.
std::vector<RiskReport> run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);
std::vector<RiskReport> run_experiment(const std::filesystem::path& config_path,
                                       std::ostream* log = nullptr);

/// Prints the per-eps Theta sizes and grid dimensions without simulating.
void dry_run(const ExperimentConfig& cfg, std::ostream& os);

/// x nodes of the experiment: the node of cfg.x, or x_grid^d nodes in D0.
std::vector<Point> experiment_points(const ExperimentConfig& cfg);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

} // namespace ptsel
