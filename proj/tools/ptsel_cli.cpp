#include "ptsel/bench.hpp"
#include "ptsel/checks.hpp"
#include "ptsel/comparison.hpp"
#include "ptsel/field.hpp"
#include "ptsel/func_classes.hpp"
#include "ptsel/majorant.hpp"
#include "ptsel/rng.hpp"
#include "ptsel/selector.hpp"
#include "ptsel/theta_grid.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>

using namespace ptsel;

namespace {

struct FamilyOpts
{
  std::string kind = "general";
  std::string profile = "triweight";
  int order = 0;
  double h_min = 0.05, h_max = 0.5;
  double sigma_ratio = 1.189207115002721;
  int n_angles = 0;
  double gamma = 1.0, phi = 0.0;

  void add(CLI::App* app)
  {
    app->add_option("--family", kind, "general, single-index, aniso-holder, isotropic, mixed");
    app->add_option("--profile", profile, "box-smooth, quartic, triweight");
    app->add_option("--order", order, "vanishing-moment order of the base kernel");
    app->add_option("--h-min", h_min);
    app->add_option("--h-max", h_max);
    app->add_option("--sigma-ratio", sigma_ratio);
    app->add_option("--angles", n_angles, "number of rotation angles (d = 2)");
    app->add_option("--gamma", gamma);
    app->add_option("--phi", phi);
  }

  FamilySpec spec(int d) const
  {
    FamilySpec s;
    s.family = parse_family(kind);
    s.dim = d;
    s.profile = parse_profile(profile);
    s.order = order;
    s.h_min = h_min;
    s.h_max = h_max;
    s.sigma_ratio = sigma_ratio;
    s.n_angles = n_angles;
    s.gamma = gamma;
    s.phi = phi;
    return s;
  }
};

void print_majorant(const MajorantSpec& m)
{
  std::printf("variant %s, e source %s%s\n", std::string(to_string(m.variant)).c_str(),
              m.e_source.c_str(), m.fallback_used ? " (fallback)" : "");
  std::printf("c_e %.6g  C_e %.6g  kappa0 %.6g  kappa1 %.6g  C %.6g\n", m.c_e, m.C_e,
              m.kappa0, m.kappa1, m.C_variant);
  std::printf("sigma range [%.6g, %.6g]\n", m.sigma_min, m.sigma_max);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Pointwise adaptive kernel selection in the Gaussian white noise model"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample an observation field and write it");
  FunctionSpec fspec;
  double sim_eps = 0.1, sim_margin = 0.25;
  long sim_n = 128;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "field.bin";
  std::vector<double> sim_omega, sim_alpha_vec;
  sim->add_option("--function", fspec.kind, "constant, cusp, trig, single_index, aniso, besov");
  sim->add_option("--dim", fspec.dim);
  sim->add_option("--alpha", fspec.alpha);
  sim->add_option("--alpha-vec", sim_alpha_vec)->delimiter(',');
  sim->add_option("--L", fspec.L);
  sim->add_option("--omega", sim_omega)->delimiter(',');
  sim->add_option("--s", fspec.s);
  sim->add_option("--p", fspec.p);
  sim->add_option("--value", fspec.value);
  sim->add_option("--inner", fspec.inner);
  sim->add_option("--function-seed", fspec.seed);
  sim->add_option("--eps", sim_eps);
  sim->add_option("--n", sim_n);
  sim->add_option("--margin", sim_margin);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out);

  // select
  auto* sel = app.add_subcommand("select", "Run the selection rule on a stored field");
  std::string sel_field = "field.bin", sel_variant = "general", sel_trace;
  std::vector<double> sel_x;
  int sel_e_reps = 400;
  std::uint64_t sel_seed = 1;
  FamilyOpts sel_fam;
  sel->add_option("--field", sel_field)->required();
  sel_fam.add(sel);
  sel->add_option("--variant", sel_variant);
  sel->add_option("--x", sel_x, "query point, comma separated")->delimiter(',');
  sel->add_option("--reps", sel_e_reps, "Monte Carlo replications for the e table");
  sel->add_option("--seed", sel_seed);
  sel->add_option("--out,--trace", sel_trace, "selection trace CSV");

  // majorant
  auto* maj = app.add_subcommand("majorant", "Estimate the e table and build a majorant");
  int maj_dim = 1, maj_reps = 400;
  long maj_n = 128;
  std::uint64_t maj_seed = 1;
  std::string maj_variant = "general", maj_out;
  double maj_eps = 0.0;
  FamilyOpts maj_fam;
  maj->add_option("--dim", maj_dim);
  maj->add_option("--n", maj_n);
  maj_fam.add(maj);
  maj->add_option("--variant", maj_variant);
  maj->add_option("--eps", maj_eps, "noise level (mixed variant)");
  maj->add_option("--reps", maj_reps);
  maj->add_option("--seed", maj_seed);
  maj->add_option("--out", maj_out, "ETable CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a Monte Carlo experiment from a config file");
  std::string bench_cfg;
  std::optional<std::uint64_t> bench_seed;
  std::optional<int> bench_reps;
  std::optional<std::string> bench_out;
  bool bench_dry = false, bench_quiet = false;
  bench->add_option("config", bench_cfg)->required()->check(CLI::ExistingFile);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--reps", bench_reps);
  bench->add_option("--out", bench_out);
  bench->add_flag("--dry-run", bench_dry, "validate and print Theta sizes only");
  bench->add_flag("--quiet", bench_quiet);

  // verify
  auto* ver = app.add_subcommand("verify", "Run the structural invariant suites");
  std::uint64_t ver_seed = 7;
  int ver_reps = 2000;
  ver->add_option("--seed", ver_seed);
  ver->add_option("--reps", ver_reps, "replications of the concentration suite");
  std::string ver_out;
  ver->add_option("--out", ver_out, "also write the report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      if (!sim_omega.empty())
        fspec.omega = sim_omega;
      if (!sim_alpha_vec.empty())
        fspec.alpha_vec = sim_alpha_vec;
      auto F = make_function(fspec);
      auto grid = make_grid(fspec.dim, sim_n, sim_margin);
      auto field = sample_field(F, sim_eps, grid, sim_seed);
      write_field(sim_out, field);
      std::printf("wrote %s: %zu cells, eps %.6g, truth %s\n", sim_out.c_str(),
                  grid.size(), sim_eps, F.id().c_str());
    } else if (*sel) {
      auto field = read_field(sel_field);
      const int d = field.grid.dim();
      auto theta = make_theta_grid(sel_fam.spec(d));
      ComparisonEngine engine(theta, field.grid);
      auto table = e_mc(engine, sel_e_reps, derive_seed(sel_seed, 0, StreamRole::noise));
      auto spec = make_majorant(parse_variant(sel_variant), table, theta, 2, field.eps);
      Point x{0, 0, 0};
      for (std::size_t i = 0; i < sel_x.size() && i < 3; ++i)
        x[i] = sel_x[i];
      auto res = select(field, engine, spec, x);
      std::printf("|Theta| %zu  mu_hat %zu (%s)  estimate %.17g\n", theta.size(), res.mu_hat,
                  theta[res.mu_hat].describe().c_str(), res.estimate);
      if (!sel_trace.empty())
        write_trace_csv(sel_trace, res, theta);
    } else if (*maj) {
      auto theta = make_theta_grid(maj_fam.spec(maj_dim));
      auto grid = make_grid(maj_dim, maj_n, theta_margin(theta));
      ComparisonEngine engine(theta, grid);
      auto table = e_mc(engine, maj_reps, derive_seed(maj_seed, 0, StreamRole::noise));
      auto spec = make_majorant(parse_variant(maj_variant), table, theta, 2, maj_eps);
      std::printf("|Theta| %zu, %zu levels%s\n", theta.size(), theta.levels().size(),
                  table.se_warning ? " (e table s.e. above target)" : "");
      print_majorant(spec);
      for (std::size_t i = 0; i < table.sigma.size(); ++i)
        std::printf("  sigma %-12.6g e_hat %-12.6g se %-10.3g Q %.6g\n", table.sigma[i],
                    table.e_hat[i], table.se[i], majorant_Q(table.sigma[i], spec));
      if (!maj_out.empty())
        write_etable_csv(maj_out, table);
    } else if (*bench) {
      auto cfg = load_config(bench_cfg);
      if (bench_seed)
        cfg.seed = *bench_seed;
      if (bench_reps)
        cfg.reps = *bench_reps;
      if (bench_out)
        cfg.out = *bench_out;
      if (bench_dry) {
        dry_run(cfg, std::cout);
        return 0;
      }
      auto reports = run_experiment(cfg, bench_quiet ? nullptr : &std::cerr);
      for (const auto& r : reports) {
        if (r.fit.x.empty()) {
          std::printf("%s: %zu points, no fit\n", r.family.c_str(), r.points.size());
          continue;
        }
        std::printf("%s: slope %.4f  95%% CI [%.4f, %.4f]\n", r.family.c_str(), r.fit.slope,
                    r.fit.ci_lo, r.fit.ci_hi);
      }
      std::printf("artifacts in %s\n", cfg.out.string().c_str());
    } else if (*ver) {
      auto results = run_invariant_checks(ver_seed, ver_reps);
      bool ok = true;
      std::string text;
      for (const auto& c : results) {
        text += format_check(c) + "\n";
        ok = ok && c.pass;
      }
      std::fputs(text.c_str(), stdout);
      if (!ver_out.empty()) {
        std::FILE* f = std::fopen(ver_out.c_str(), "wb");
        if (!f)
          throw std::runtime_error("cannot open " + ver_out + " for writing");
        std::fputs(text.c_str(), f);
        std::fclose(f);
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
