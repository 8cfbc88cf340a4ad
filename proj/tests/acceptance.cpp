// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [config_dir] [out_dir]
#include "ptsel/bench.hpp"
#include "ptsel/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

using namespace ptsel;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr std::uint64_t kCheckSeed = 7;
constexpr int kConcentrationReps = 2000;
constexpr double kSiSlopeLo = 0.55, kSiSlopeHi = 0.78;
constexpr double kSiOverIsoGap = 0.05;
constexpr double kAhTarget = 4.0 / 7.0, kAhTol = 0.12;
constexpr double kBesovTarget = 2.0 / 3.0, kBesovTol = 0.12;
constexpr double kRateBudget = 1800.0; // seconds, criteria 7 and 8
constexpr double kOracleRatioMax = 4.0;
constexpr double kOracleSpreadMax = 2.0;

struct Run
{
  ExperimentConfig cfg;
  std::vector<RiskReport> reports;
  double seconds = 0.0;
  std::string error;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Run run_config(const fs::path& path, const fs::path& out)
{
  Run r;
  auto t0 = Clock::now();
  try {
    r.cfg = load_config(path);
    r.cfg.out = out;
    r.reports = run_experiment(r.cfg);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  std::fprintf(stderr, "  ran %s in %.0f s%s\n", path.filename().c_str(), r.seconds,
               r.error.empty() ? "" : (" (error: " + r.error + ")").c_str());
  return r;
}

const RiskReport* family(const Run& r, const std::string& label)
{
  for (const auto& rep : r.reports)
    if (rep.family == label)
      return &rep;
  return nullptr;
}

std::string slope_text(const RiskReport& rep)
{
  return rep.family + " slope " + fmt("%.3f", rep.fit.slope) + " [" +
         fmt("%.3f", rep.fit.ci_lo) + ", " + fmt("%.3f", rep.fit.ci_hi) + "]";
}

CheckResult fail(int id, std::string name, std::string why)
{
  CheckResult c;
  c.id = id;
  c.name = std::move(name);
  c.detail = std::move(why);
  return c;
}

CheckResult single_index_rate(const Run& r)
{
  const std::string name = "single-index rate and gain over isotropic";
  if (!r.error.empty())
    return fail(7, name, r.error);
  const auto* si = family(r, "si");
  const auto* iso = family(r, "iso");
  if (!si || !iso || si->fit.x.empty() || iso->fit.x.empty())
    return fail(7, name, "missing si/iso fits");
  CheckResult c;
  c.id = 7;
  c.name = name;
  c.seconds = r.seconds;
  c.budget_seconds = kRateBudget;
  double gap = si->fit.slope - iso->fit.slope;
  bool in_band = si->fit.slope >= kSiSlopeLo && si->fit.slope <= kSiSlopeHi;
  c.pass = in_band && gap >= kSiOverIsoGap && r.seconds < kRateBudget;
  c.detail = slope_text(*si) + " (band [" + fmt("%.2f", kSiSlopeLo) + ", " +
             fmt("%.2f", kSiSlopeHi) + "]), " + slope_text(*iso) + ", gap " +
             fmt("%.3f", gap) + " (>= " + fmt("%.2f", kSiOverIsoGap) + ")";
  if (r.seconds >= kRateBudget)
    c.detail += "; over the time budget";
  return c;
}

CheckResult slope_check(int id, const std::string& name, const Run& r, const std::string& label,
                        double target, double tol, double budget)
{
  if (!r.error.empty())
    return fail(id, name, r.error);
  const auto* rep = family(r, label);
  if (!rep || rep->fit.x.empty())
    return fail(id, name, "missing fit for " + label);
  CheckResult c;
  c.id = id;
  c.name = name;
  c.seconds = r.seconds;
  c.budget_seconds = budget;
  c.pass = std::abs(rep->fit.slope - target) <= tol && (budget <= 0 || r.seconds < budget);
  c.detail = slope_text(*rep) + ", target " + fmt("%.4f", target) + " +- " + fmt("%.2f", tol);
  if (budget > 0 && r.seconds >= budget)
    c.detail += "; over the time budget";
  return c;
}

CheckResult oracle_ratio(const std::map<std::string, Run>& runs)
{
  CheckResult c;
  c.id = 10;
  c.name = "oracle ratio";
  c.pass = true;
  int scenarios = 0;
  double worst_max = 0.0, worst_spread = 1.0;
  std::string worst_name;
  for (const auto& [name, run] : runs) {
    if (!run.error.empty()) {
      c.pass = false;
      c.detail += name + " failed: " + run.error + "; ";
      continue;
    }
    for (const auto& rep : run.reports) {
      bool defined = !rep.points.empty() &&
                     std::all_of(rep.points.begin(), rep.points.end(),
                                 [](const RiskPoint& p) { return p.oracle_defined; });
      if (!defined)
        continue;
      ++scenarios;
      double lo = INFINITY, hi = 0.0;
      for (const auto& p : rep.points) {
        lo = std::min(lo, p.ratio);
        hi = std::max(hi, p.ratio);
      }
      double spread = lo > 0 ? hi / lo : INFINITY;
      if (hi > kOracleRatioMax || spread >= kOracleSpreadMax)
        c.pass = false;
      if (hi > worst_max)
        worst_max = hi;
      if (spread > worst_spread) {
        worst_spread = spread;
        worst_name = name + "/" + rep.family;
      }
    }
  }
  if (scenarios == 0)
    c.pass = false;
  c.detail += std::to_string(scenarios) + " scenarios, max ratio " + fmt("%.3g", worst_max) +
              " (<= " + fmt("%.0f", kOracleRatioMax) + "), widest spread " +
              fmt("%.3g", worst_spread) + " at " + worst_name + " (< " +
              fmt("%.0f", kOracleSpreadMax) + ")";
  return c;
}

std::string slurp(const fs::path& p)
{
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

CheckResult determinism(const std::vector<fs::path>& configs, const fs::path& first,
                        const fs::path& second)
{
  CheckResult c;
  c.id = 11;
  c.name = "byte-identical reruns";
  auto t0 = Clock::now();
  int files = 0, differ = 0;
  std::string which;
  for (const auto& cfg : configs) {
    const auto stem = cfg.stem().string();
    auto rerun = run_config(cfg, second / stem);
    if (!rerun.error.empty()) {
      ++differ;
      which += stem + " (error) ";
      continue;
    }
    for (const auto& entry : fs::directory_iterator(first / stem)) {
      if (entry.path().extension() != ".csv")
        continue;
      ++files;
      auto other = second / stem / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        ++differ;
        which += stem + "/" + entry.path().filename().string() + " ";
      }
    }
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  c.pass = files > 0 && differ == 0;
  c.detail = std::to_string(files) + " CSV files compared, " + std::to_string(differ) +
             " differ" + (which.empty() ? "" : ": " + which);
  return c;
}

} // namespace

int main(int argc, char** argv)
{
  const fs::path config_dir = argc > 1 ? argv[1] : PTSEL_CONFIG_DIR;
  const fs::path out_dir = argc > 2 ? argv[2] : "acceptance_out";
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);

  std::vector<CheckResult> results = run_invariant_checks(kCheckSeed, kConcentrationReps);
  std::fflush(stdout);
  for (const auto& c : results)
    std::printf("%s\n", format_check(c).c_str());
  std::fflush(stdout);

  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(config_dir))
    if (entry.path().extension() == ".ini")
      configs.push_back(entry.path());
  std::sort(configs.begin(), configs.end());

  std::map<std::string, Run> runs;
  for (const auto& cfg : configs)
    runs[cfg.stem().string()] = run_config(cfg, out_dir / "first" / cfg.stem());

  auto get = [&](const std::string& stem) -> Run {
    auto it = runs.find(stem);
    if (it != runs.end())
      return it->second;
    Run r;
    r.error = "config " + stem + ".ini not found in " + config_dir.string();
    return r;
  };

  std::vector<CheckResult> late;
  late.push_back(single_index_rate(get("single_index")));
  late.push_back(slope_check(8, "anisotropic Hölder rate", get("aniso_holder"), "ah", kAhTarget,
                             kAhTol, kRateBudget));
  late.push_back(slope_check(9, "Besov dense-case global rate", get("besov_dense"), "besov",
                             kBesovTarget, kBesovTol, 0.0));
  late.push_back(oracle_ratio(runs));
  for (const auto& c : late)
    std::printf("%s\n", format_check(c).c_str());
  std::fflush(stdout);

  auto det = determinism(configs, out_dir / "first", out_dir / "second");
  std::printf("%s\n", format_check(det).c_str());

  late.push_back(det);
  results.insert(results.end(), late.begin(), late.end());
  int passed = static_cast<int>(
      std::count_if(results.begin(), results.end(), [](const CheckResult& c) { return c.pass; }));
  std::printf("%d/%zu criteria passed\n", passed, results.size());
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}
