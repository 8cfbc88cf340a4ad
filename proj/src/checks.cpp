#include "ptsel/checks.hpp"

#include "ptsel/base_kernel.hpp"
#include "ptsel/field.hpp"
#include "ptsel/kernel_param.hpp"
#include "ptsel/linear_est.hpp"
#include "ptsel/oracle.hpp"
#include "ptsel/rng.hpp"
#include "ptsel/stencil.hpp"
#include "ptsel/theta_grid.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace ptsel {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

KernelParam make_param(BaseKernelPtr G, std::array<double, 3> h, double angle)
{
  KernelParam mu;
  mu.family = Family::general;
  mu.dim = G->dim();
  mu.h = h;
  mu.angle = angle;
  mu.base = std::move(G);
  return mu;
}

std::string g6(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Runs body, fills timing and applies the runtime budget.
template <class Body>
CheckResult timed(int id, std::string name, double budget, Body&& body)
{
  CheckResult c;
  c.id = id;
  c.name = std::move(name);
  c.budget_seconds = budget;
  auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("exception: ") + e.what();
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget > 0 && c.seconds > budget) {
    c.pass = false;
    c.detail += "; over the " + g6(budget) + " s budget";
  }
  return c;
}

} // namespace

std::string format_check(const CheckResult& c)
{
  char t[32];
  std::snprintf(t, sizeof t, "%.1f", c.seconds);
  return std::string(c.pass ? "PASS" : "FAIL") + " [" + std::to_string(c.id) + "] " + c.name +
         ": " + c.detail + " (" + t + " s)";
}

CheckResult check_kernel_validity()
{
  return timed(1, "kernel validity", 10.0, [](CheckResult& c) {
    double worst_mass = 0, worst_moment = 0;
    int failures = 0, kernels = 0;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto p : {Profile::box_smooth, Profile::quartic, Profile::triweight})
      for (int d = 1; d <= 3; ++d)
        for (int l = 0; l <= 4; ++l) {
          auto G = make_base_kernel(p, d, l);
          ++kernels;
          auto rep = validate_moments(*G, l);
          worst_mass = std::max(worst_mass, rep.mass_error);
          worst_moment = std::max(worst_moment, rep.max_moment);
          bool ok = rep.ok() && rep.mass_error <= 1e-8 && rep.max_moment <= 1e-6 &&
                    G->support_radius() <= 0.5;
          // points outside the half cube must give exactly zero
          for (int k = 0; k < 200 && ok; ++k) {
            Point t{u(rng), u(rng), u(rng)};
            bool outside = false;
            for (int i = 0; i < d; ++i)
              outside = outside || std::abs(t[i]) >= 0.5;
            if (outside && (*G)(t) != 0.0)
              ok = false;
          }
          failures += ok ? 0 : 1;
        }
    c.pass = failures == 0;
    c.detail = std::to_string(kernels) + " kernels, max |int G - 1| " + g6(worst_mass) +
               ", max moment " + g6(worst_moment) + ", failures " + std::to_string(failures);
  });
}

CheckResult check_aux_bias_identity(std::uint64_t seed, int cases)
{
  return timed(2, "auxiliary bias identity", 60.0, [=](CheckResult& c) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    int bad = 0;
    for (int k = 0; k < cases; ++k) {
      const int d = k % 2 == 0 ? 1 : 2;
      const auto g = make_grid(d, d == 1 ? 256 : 128, 0.5);
      const int order = static_cast<int>(u(rng) * 3);
      const Profile prof = std::array{Profile::box_smooth, Profile::quartic,
                                      Profile::triweight}[static_cast<int>(u(rng) * 3) % 3];
      auto G = make_base_kernel(prof, d, order);
      const double a = 1 + 4 * u(rng), b = 2 * kPi * u(rng), c2 = 3 * u(rng);
      const TestFunction F(
          d,
          [=](const Point& t) {
            return std::sin(a * t[0] + b) +
                   c2 * t[0] * t[0] * (d == 2 ? std::cos(a * t[1]) : 1.0);
          },
          {}, "random-smooth");
      auto rh = [&] {
        std::array<double, 3> h{1, 1, 1};
        for (int i = 0; i < d; ++i)
          h[i] = 0.06 + 0.34 * u(rng);
        return h;
      };
      const auto mu = make_param(G, rh(), d == 2 ? kPi * u(rng) : 0.0);
      const auto nu = make_param(G, rh(), d == 2 ? kPi * u(rng) : 0.0);
      Point x{0, 0, 0};
      for (int i = 0; i < d; ++i)
        x[i] = -0.3 + 0.6 * u(rng);
      const auto r = bias_aux_delta(F, mu, nu, x, g);
      const double err = std::abs(r.direct - r.smoothed) / std::max(std::abs(r.direct), 1e-12);
      if (!(std::abs(r.direct - r.smoothed) <= 1e-3 * std::max(std::abs(r.direct), 1e-12)))
        ++bad;
      worst = std::max(worst, err);
    }
    c.pass = bad == 0;
    c.detail = std::to_string(cases) + " cases (d = 1 n = 256, d = 2 n = 128), max rel err " +
               g6(worst) + " (tol 1e-3)";
  });
}

CheckResult check_aux_kernels(std::uint64_t seed, int pairs)
{
  return timed(3, "auxiliary kernel commutativity", 60.0, [=](CheckResult& c) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> hu(0.06, 0.3), au(0.0, kPi), xu(-0.3, 0.3);
    double worst_comm = 0, worst_two = 0;
    for (int k = 0; k < pairs; ++k) {
      const int d = k % 2 == 0 ? 2 : 1;
      const auto g = make_grid(d, d == 1 ? 256 : 100, 0.5);
      auto G = make_base_kernel(k % 3 == 0 ? Profile::quartic : Profile::triweight, d, k % 3);
      auto rh = [&] {
        std::array<double, 3> h{1, 1, 1};
        for (int i = 0; i < d; ++i)
          h[i] = hu(rng);
        return h;
      };
      const auto mu = make_param(G, rh(), d == 2 ? au(rng) : 0.0);
      const auto nu = make_param(G, rh(), d == 2 && k % 4 ? au(rng) : 0.0);
      auto a = convolve_kernels(mu, nu, g);
      auto b = convolve_kernels(nu, mu, g);
      // sup-norm of the kernel densities: stencil weights over the cell volume
      worst_comm = std::max(worst_comm, max_abs_difference(a.profile, b.profile) / g.cell_volume());
      auto y = sample_field(constant_function(d, 0.0), 0.3, g,
                            derive_seed(seed, k, StreamRole::observation));
      Point x{0, 0, 0};
      for (int i = 0; i < d; ++i)
        x[i] = xu(rng);
      const double two = estimate_aux(y, mu, nu, x);
      worst_two = std::max(worst_two, std::abs(two - estimate_aux_direct(y, a, x)));
    }
    c.pass = worst_comm <= 1e-10 && worst_two <= 1e-8;
    c.detail = std::to_string(pairs) + " pairs, max |K_mu,nu - K_nu,mu| " + g6(worst_comm) +
               " (tol 1e-10), max two-stage vs direct " + g6(worst_two) + " (tol 1e-8)";
  });
}

CheckResult check_closed_forms(long n)
{
  return timed(4, "closed forms vs quadrature", 60.0, [=](CheckResult& c) {
    double worst = 0;
    // sigma_mu = ||K_mu||_2, d = 1 and 2
    for (int d : {1, 2}) {
      const auto g = make_grid(d, n, 0.5);
      for (auto p : {Profile::box_smooth, Profile::quartic, Profile::triweight})
        for (int l : {0, 1, 2})
          for (double h : {0.15, 0.25, 0.4}) {
            // the narrowest term spans h / (l + 1); keep at least ~16 cells across it
            if (h / (l + 1) * n < 16)
              continue;
            auto mu = make_param(make_base_kernel(p, d, l), {h, h, 1}, 0.0);
            auto q = kernel_norms_quadrature(mu, g);
            auto cf = kernel_norms(mu);
            worst = std::max(worst, std::abs(q.l2 / cf.l2 - 1));
          }
    }
    // sigma-tilde and the family extrema of a rotated single-index family
    FamilySpec spec;
    spec.family = Family::single_index;
    spec.dim = 2;
    spec.h_min = 0.125;
    spec.h_max = 0.5;
    spec.n_angles = 6;
    auto theta = make_theta_grid(spec);
    const auto g = make_grid(2, n, theta_margin(theta));
    double qmin = INFINITY, qmax = 0;
    for (std::size_t mu = 0; mu < theta.size(); ++mu) {
      double q = sigma_tilde_quadrature(theta[mu], theta, g);
      worst = std::max(worst, std::abs(q / theta.sigma_tilde(mu) - 1));
      qmin = std::min(qmin, q);
      qmax = std::max(qmax, q);
    }
    const auto& G = *theta.base();
    const double smin = G.norm_l1() * G.norm_l2() / spec.h_max;
    const double smax = G.norm_l1() * G.norm_l2() / std::sqrt(spec.h_max * spec.h_min);
    worst = std::max({worst, std::abs(qmin / smin - 1), std::abs(qmax / smax - 1),
                      std::abs(theta.sigma_min() / smin - 1),
                      std::abs(theta.sigma_max() / smax - 1)});
    c.pass = worst <= 5e-3;
    c.detail = "n = " + std::to_string(n) + ", max relative deviation " + g6(worst) +
               " (tol 5e-3)";
  });
}

double moment_constant(double r)
{
  if (r <= 1)
    return 1.0;
  auto core = [](double t) { return std::exp(-t * t / 2); };
  double a = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(core, 0.0, 1.0);
  boost::math::quadrature::exp_sinh<double> es;
  double b = es.integrate(
      [r](double t) {
        return t > 60 ? 0.0 : std::pow(1.0 + t, r - 1) * std::exp(-(1.0 + t) * (1.0 + t) / 2);
      },
      0.0, INFINITY);
  return std::pow(8 * r * (a + b), 1.0 / r);
}

std::vector<ConcentrationProbe> concentration_probes(const ComparisonEngine& engine,
                                                     const std::vector<std::size_t>& mus,
                                                     int reps, std::uint64_t seed)
{
  const ThetaGrid& th = engine.theta();
  const Grid& g = engine.grid();
  const std::size_t nt = th.size();

  ETable table = e_mc(engine, reps, derive_seed(seed, 0, StreamRole::probe));
  MajorantSpec spec = make_majorant(MajorantVariant::general, table, th, 2);
  std::vector<double> halfQ(nt);
  for (std::size_t nu = 0; nu < nt; ++nu)
    halfQ[nu] = 0.5 * majorant_Q(th.sigma_tilde(nu), spec);

  // exact variances of xi_{mu,nu} - xi_nu
  std::vector<double> sigma_T(mus.size(), 0.0);
  for (std::size_t k = 0; k < mus.size(); ++k)
    for (std::size_t nu = 0; nu < nt; ++nu) {
      Stencil aux = convolve_stencils(engine.stencil(mus[k]), engine.stencil(nu));
      const Stencil& w = engine.stencil(nu);
      double s2 = 0;
      for (std::size_t f = 0; f < aux.size(); ++f) {
        double v = aux.w[f] - w.at(aux.offset(f));
        s2 += v * v;
      }
      sigma_T[k] = std::max(sigma_T[k], std::sqrt(s2 / g.cell_volume()));
    }

  const std::vector<double> rs{1.0, 2.0, 4.0};
  const std::size_t m = mus.size();
  std::vector<std::vector<double>> s_all(m), s_low(m), s_tail(m);
  const Index centre = g.nearest_node(Point{0, 0, 0});
  for_each_noise_table(engine, reps, derive_seed(seed, 1, StreamRole::probe), centre,
                       [&](int, const EstimateTable& t) {
                         for (std::size_t k = 0; k < m; ++k) {
                           const std::size_t mu = mus[k];
                           const double st = th.sigma_tilde(mu);
                           double a = 0, lo = 0, tail = -INFINITY;
                           for (std::size_t nu = 0; nu < nt; ++nu) {
                             const double x = std::abs(t.pair(mu, nu) - t.single(nu));
                             a = std::max(a, x);
                             if (th.sigma_tilde(nu) <= st)
                               lo = std::max(lo, std::abs(t.pair(nu, mu) - t.single(nu)));
                             if (th.sigma_tilde(nu) >= st)
                               tail = std::max(tail, x - halfQ[nu]);
                           }
                           s_all[k].push_back(a);
                           s_low[k].push_back(lo);
                           s_tail[k].push_back(tail);
                         }
                       });

  auto frac = [&](const std::vector<double>& v, double thr) {
    double c = 0;
    for (double x : v)
      c += x > thr ? 1.0 : 0.0;
    double p = c / v.size();
    return std::pair{p, std::sqrt(p * (1 - p) / v.size())};
  };

  std::vector<ConcentrationProbe> out;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t mu = mus[k];
    const double st = th.sigma_tilde(mu);
    double mean_all = 0;
    for (double x : s_all[k])
      mean_all += x;
    mean_all /= reps;
    for (double uu : {1.0, 2.0, 3.0}) {
      const double u = uu * sigma_T[k];
      auto [p, se] = frac(s_all[k], mean_all + u);
      out.push_back({"borell-tis", mu, uu, p, se,
                     2 * std::exp(-u * u / (2 * sigma_T[k] * sigma_T[k]))});
    }
    const double e_mu = table.e_hat[th.level_of(mu)];
    for (double r : rs) {
      double s = 0, s2 = 0;
      for (double x : s_low[k]) {
        double v = std::pow(x, r);
        s += v;
        s2 += v * v;
      }
      double mean = s / reps, var = (s2 / reps - mean * mean) * reps / (reps - 1);
      double M = std::pow(mean, 1 / r);
      double se = M > 0 ? std::sqrt(std::max(var, 0.0) / reps) / (r * std::pow(M, r - 1)) : 0.0;
      out.push_back({"moment", mu, r, M, se, moment_constant(r) * (e_mu + 2 * st)});
    }
    for (double tt : {0.0, 1.0, 2.0}) {
      const double t = tt * st;
      auto [p, se] = frac(s_tail[k], t);
      out.push_back({"tail", mu, tt, p, se,
                     4 * std::pow(spec.sigma_min / st, spec.kappa1 / 64) *
                         std::exp(-t * t / (16 * st * st))});
    }
  }
  return out;
}

CheckResult check_concentration(std::uint64_t seed, int reps)
{
  return timed(5, "concentration suite", 300.0, [=](CheckResult& c) {
    int total = 0, bad = 0;
    std::ostringstream worst;
    double worst_gap = -INFINITY;
    for (int d : {1, 2}) {
      FamilySpec spec;
      spec.family = d == 1 ? Family::general : Family::single_index;
      spec.dim = d;
      spec.h_min = d == 1 ? 0.04 : 0.08;
      spec.h_max = 0.5;
      spec.n_angles = d == 2 ? 4 : 0;
      spec.sigma_ratio = d == 1 ? spec.sigma_ratio : std::sqrt(2.0);
      auto theta = make_theta_grid(spec);
      auto grid = make_grid(d, d == 1 ? 128 : 64, theta_margin(theta));
      ComparisonEngine engine(theta, grid);
      const auto& order = theta.canonical_order();
      std::vector<std::size_t> mus{order.front(), order[order.size() / 2], order.back()};
      auto probes = concentration_probes(engine, mus, reps,
                                         derive_seed(seed, static_cast<std::uint64_t>(d),
                                                     StreamRole::probe));
      for (const auto& p : probes) {
        ++total;
        if (!p.ok())
          ++bad;
        double gap = (p.empirical - 4 * p.se) / std::max(p.bound, 1e-300);
        if (gap > worst_gap) {
          worst_gap = gap;
          worst.str("");
          worst << p.kind << " d=" << d << " at " << g6(p.at) << ": " << g6(p.empirical)
                << " (s.e. " << g6(p.se) << ") vs bound " << g6(p.bound);
        }
      }
    }
    c.pass = bad == 0;
    c.detail = std::to_string(total) + " probes at " + std::to_string(reps) +
               " reps, violations " + std::to_string(bad) + ", tightest " + worst.str();
  });
}

CheckResult check_semimetric(std::uint64_t seed, int pairs)
{
  return timed(6, "semi-metric bounds", 120.0, [=](CheckResult& c) {
    std::mt19937_64 rng(seed);
    double worst_gen = -INFINITY, worst_par = -INFINITY;
    int total = 0;
    for (Family fam : {Family::single_index, Family::general}) {
      FamilySpec fs;
      fs.family = fam;
      fs.dim = 2;
      fs.h_min = fam == Family::general ? 0.12 : 0.08;
      fs.h_max = 0.4;
      fs.n_angles = fam == Family::general ? 4 : 12;
      fs.sigma_ratio = fam == Family::general ? std::sqrt(2.0) : fs.sigma_ratio;
      auto theta = make_theta_grid(fs);
      auto g = make_grid(2, 128, theta_margin(theta));
      std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
      std::vector<std::array<std::size_t, 4>> quads;
      for (int k = 0; k < (pairs + 3) / 4; ++k) {
        const std::size_t mu = pick(rng), nu = pick(rng);
        quads.push_back({mu, nu, pick(rng), pick(rng)});
        quads.push_back({mu, nu, mu, pick(rng)});
      }
      const auto rep = semimetric_check(theta, quads, g);
      total += static_cast<int>(rep.cases.size());
      worst_gen = std::max(worst_gen, rep.max_excess_general);
      worst_par = std::max(worst_par, rep.max_excess_parametric);
    }
    c.pass = worst_gen <= 1e-3 && worst_par <= 1e-3;
    c.detail = std::to_string(total) + " quadruples (d = 2, rotations), max relative excess " +
               g6(worst_gen) + " (two-term bound), " + g6(worst_par) +
               " (parametric bound), slack 1e-3";
  });
}

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed, int concentration_reps)
{
  return {check_kernel_validity(),
          check_aux_bias_identity(derive_seed(seed, 2, StreamRole::probe)),
          check_aux_kernels(derive_seed(seed, 3, StreamRole::probe)),
          check_closed_forms(),
          check_concentration(derive_seed(seed, 5, StreamRole::probe), concentration_reps),
          check_semimetric(derive_seed(seed, 6, StreamRole::probe))};
}

} // namespace ptsel
