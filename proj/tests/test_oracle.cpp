#include "ptsel/comparison.hpp"
#include "ptsel/field.hpp"
#include "ptsel/linear_est.hpp"
#include "ptsel/majorant.hpp"
#include "ptsel/oracle.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace ptsel;

namespace {

constexpr double kPi = 3.14159265358979323846;

KernelParam param(BaseKernelPtr G, std::array<double, 3> h, double angle = 0.0,
                  Family fam = Family::general)
{
  KernelParam mu;
  mu.family = fam;
  mu.dim = G->dim();
  mu.h = h;
  mu.angle = angle;
  mu.base = std::move(G);
  return mu;
}

TestFunction fn(int d, TestFunction::Eval f, std::string id = "f")
{
  return TestFunction(d, std::move(f), {}, std::move(id));
}

MajorantSpec linear_majorant(const ThetaGrid& theta)
{
  MajorantSpec s;
  s.e = EFunction{[](double x) { return x; }, "linear"};
  s.C_e = s.c_e = 2.0;
  set_general_kappas(s);
  s.sigma_min = theta.sigma_min();
  s.sigma_max = theta.sigma_max();
  return s;
}

} // namespace

TEST_CASE("bias of constants, linear functions and a parabola")
{
  auto g = make_grid(1, 256, 0.5);
  auto G0 = make_base_kernel(Profile::triweight, 1, 0);
  auto G1 = make_base_kernel(Profile::quartic, 1, 1);
  const auto c = fn(1, [](const Point&) { return 3.0; });
  const auto lin = fn(1, [](const Point& t) { return 1.0 - 2.0 * t[0]; });
  const auto par = fn(1, [](const Point& t) { return t[0] * t[0]; });
  for (double h : {0.05, 0.2, 0.5}) {
    for (double y : {-0.4, 0.0, 0.33}) {
      CHECK(std::abs(bias(c, param(G0, {h, 1, 1}), Point{y, 0, 0}, g)) <= 1e-6);
      CHECK(std::abs(bias(lin, param(G1, {h, 1, 1}), Point{y, 0, 0}, g)) <= 1e-5);
      const double expect = h * h * G0->moment({2, 0, 0});
      CHECK(std::abs(bias(par, param(G0, {h, 1, 1}), Point{y, 0, 0}, g) - expect) <= 1e-5);
    }
  }
  CHECK_THROWS_AS(bias(c, param(G0, {0.5, 1, 1}), Point{0.9, 0, 0}, g), std::out_of_range);
}

TEST_CASE("both sides of the auxiliary bias identity agree")
{
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int d : {1, 2}) {
    auto g = make_grid(d, d == 1 ? 256 : 128, 0.5);
    for (int order : {0, 2}) {
      auto G = make_base_kernel(Profile::triweight, d, order);
      for (int trial = 0; trial < 6; ++trial) {
        const double a = 1 + 4 * u(rng), b = 2 * kPi * u(rng), c2 = 3 * u(rng);
        const auto F = fn(d, [=](const Point& t) {
          return std::sin(a * t[0] + b) + c2 * t[0] * t[0] * (d == 2 ? std::cos(a * t[1]) : 1.0);
        });
        auto rh = [&] {
          std::array<double, 3> h{1, 1, 1};
          for (int i = 0; i < d; ++i)
            h[i] = 0.06 + 0.34 * u(rng);
          return h;
        };
        const auto mu = param(G, rh(), d == 2 ? kPi * u(rng) : 0.0);
        const auto nu = param(G, rh(), d == 2 ? kPi * u(rng) : 0.0);
        Point x{0, 0, 0};
        for (int i = 0; i < d; ++i)
          x[i] = -0.3 + 0.6 * u(rng);
        const auto r = bias_aux_delta(F, mu, nu, x, g);
        CHECK(std::abs(r.direct - r.smoothed) <=
              1e-3 * std::max(std::abs(r.direct), 1e-12) + 1e-14);
      }
    }
  }

  auto g = make_grid(1, 256, 0.5);
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  const auto c = fn(1, [](const Point&) { return -2.0; });
  const auto r = bias_aux_delta(c, param(G, {0.3, 1, 1}), param(G, {0.1, 1, 1}), Point{}, g);
  CHECK(std::abs(r.direct) <= 1e-6);
  CHECK(std::abs(r.smoothed) <= 1e-6);

  // A delta-like nu leaves B_mu nearly unchanged.
  const auto F = fn(1, [](const Point& t) { return std::exp(2 * t[0]); });
  const auto mu = param(G, {0.3, 1, 1});
  const auto narrow = param(G, {2.5 * g.spacing(), 1, 1});
  const Point x{0.1, 0, 0};
  const double bm = bias(F, mu, x, g);
  CHECK(std::abs(bias_aux_delta(F, mu, narrow, x, g).direct - bm) <= 0.02 * std::abs(bm));
}

TEST_CASE("integrated bias bounds")
{
  auto g = make_grid(1, 256, 0.5);
  FamilySpec fs;
  fs.dim = 1;
  fs.h_min = 0.04;
  fs.h_max = 0.4;
  auto theta = make_theta_grid(fs);
  const auto cst = fn(1, [](const Point&) { return 1.0; });
  for (const auto& mu : theta.params())
    CHECK(integrated_bias(cst, mu, theta, Point{}, g) <= 1e-6);

  const auto F = fn(1, [](const Point& t) { return std::abs(t[0] - 0.05) + std::sin(5 * t[0]); });
  const Point x{0.02, 0, 0};
  const double mass = theta.base()->norm_l1();
  for (const auto& mu : theta.params()) {
    const double bt = integrated_bias(F, mu, theta, x, g);
    CHECK(bt >= std::abs(bias(F, mu, x, g)));
    double sup = 0.0;
    for (double c : g.coords()) {
      const Point y{c, 0, 0};
      if (std::abs(y[0] - x[0]) <= fs.h_max / 2 + 1e-12)
        sup = std::max(sup, std::abs(bias(F, mu, y, g)));
    }
    CHECK(bt <= mass * sup * (1 + 1e-9));
  }
}

TEST_CASE("single-index aligned kernels obey the Hölder bias bound")
{
  FamilySpec fs;
  fs.family = Family::single_index;
  fs.dim = 2;
  fs.h_min = 0.05;
  fs.h_max = 0.4;
  fs.n_angles = 8;
  auto theta = make_theta_grid(fs);
  auto g = make_grid(2, 96, theta_margin(theta));
  ComparisonEngine engine(theta, g);
  const double a = 3 * kPi / 8;
  const auto F = fn(2, [a](const Point& t) {
    return std::abs(std::cos(a) * t[0] + std::sin(a) * t[1] - 0.01);
  });
  const auto sig = signal_increments(F, g);
  const Index node = snap_to_node(g, Point{0, 0, 0});
  std::vector<double> b, bt;
  oracle_biases(sig, F, engine, node, b, bt);
  int aligned = 0;
  for (std::size_t mu = 0; mu < theta.size(); ++mu) {
    if (std::abs(theta[mu].angle - a) > 1e-12)
      continue;
    ++aligned;
    CHECK(bt[mu] <= theta.base()->norm_l1() * 1.0 * theta[mu].h[0] + 1e-9);
  }
  CHECK(aligned > 3);

  // Engine values agree with the direct lattice sums.
  const Point xn = g.point(node);
  for (std::size_t mu : {std::size_t{0}, theta.size() / 2, theta.size() - 1})
    CHECK(std::abs(bt[mu] - integrated_bias(F, theta[mu], theta, xn, g)) <= 1e-10);
}

TEST_CASE("Theta_F for constants and monotonicity in eps")
{
  auto g = make_grid(1, 256, 0.5);
  FamilySpec fs;
  fs.dim = 1;
  fs.h_min = 0.03;
  fs.h_max = 0.5;
  auto theta = make_theta_grid(fs);
  ComparisonEngine engine(theta, make_grid(1, 256, theta_margin(theta)));
  auto spec = linear_majorant(theta);

  const auto cst = constant_function(1, 0.7);
  const auto sc = signal_increments(cst, engine.grid());
  const auto rc = oracle_report(sc, cst, engine, spec, 0.01, Point{});
  for (bool m : rc.member)
    CHECK(m);
  REQUIRE(rc.mu_star);
  CHECK(*rc.mu_star == theta.canonical_order().front());

  const auto F = fn(1, [](const Point& t) { return std::cos(9 * t[0]); });
  const auto sf = signal_increments(F, engine.grid());
  std::vector<bool> prev;
  for (double eps : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
    const auto r = oracle_report(sf, F, engine, spec, eps, Point{0.1, 0, 0});
    if (!prev.empty())
      for (std::size_t mu = 0; mu < theta.size(); ++mu)
        CHECK((!prev[mu] || r.member[mu]));
    prev = r.member;
    if (r.mu_star)
      CHECK(r.bound == doctest::Approx(eps * majorant_Q(theta.sigma_tilde(*r.mu_star), spec)));
  }

  std::ostringstream os;
  write_oracle_json(os, rc, theta);
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["mu_star"].get<std::size_t>() == *rc.mu_star);
  CHECK(j["rows"].size() == theta.size());
  CHECK(j["eps"].get<double>() == 0.01);
}

TEST_CASE("mu* of a cusp matches the bias/threshold balance point")
{
  FamilySpec fs;
  fs.dim = 1;
  fs.h_min = 0.02;
  fs.h_max = 0.5;
  auto theta = make_theta_grid(fs);
  auto g = make_grid(1, 512, theta_margin(theta));
  ComparisonEngine engine(theta, g);
  ETable et = e_mc(engine, 200, 9);
  auto spec = make_majorant(MajorantVariant::general, et, theta, 2);
  const auto F = fn(1, [](const Point& t) { return std::abs(t[0]); });
  const auto sig = signal_increments(F, g);
  const Point x{0, 0, 0};
  const Point xn = g.point(snap_to_node(g, x));
  const double q = theta[theta.canonical_order()[1]].h[0] / theta[theta.canonical_order()[0]].h[0];

  auto gap = [&](double h, double eps) {
    const auto mu = param(theta.base(), {h, 1, 1});
    return integrated_bias(F, mu, theta, xn, g) - 0.25 * eps * majorant_Q(sigma_tilde(mu), spec);
  };
  for (double eps : {0.05, 2e-4, 5e-5}) {
    double lo = fs.h_min, hi = fs.h_max;
    double root;
    if (gap(hi, eps) <= 0)
      root = hi;
    else if (gap(lo, eps) > 0)
      root = 0;
    else {
      for (int it = 0; it < 50; ++it) {
        const double mid = std::sqrt(lo * hi);
        (gap(mid, eps) <= 0 ? lo : hi) = mid;
      }
      root = lo;
    }
    const auto r = oracle_report(sig, F, engine, spec, eps, x);
    if (root == 0) {
      CHECK_FALSE(r.mu_star.has_value());
      continue;
    }
    REQUIRE(r.mu_star);
    const double hs = theta[*r.mu_star].h[0];
    CAPTURE(eps);
    CAPTURE(root);
    CAPTURE(hs);
    CHECK(std::abs(std::log(hs / root)) <= std::abs(std::log(q)) + 1e-9);
  }
}

TEST_CASE("semi-metric bounds")
{
  FamilySpec fs;
  fs.family = Family::single_index;
  fs.dim = 2;
  fs.h_min = 0.08;
  fs.h_max = 0.4;
  fs.n_angles = 12;
  auto theta = make_theta_grid(fs);
  auto g = make_grid(2, 128, theta_margin(theta));

  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  std::vector<std::array<std::size_t, 4>> quads;
  quads.push_back({0, 1, 0, 1});
  for (int k = 0; k < 25; ++k) {
    const std::size_t mu = pick(rng), nu = pick(rng);
    quads.push_back({mu, nu, pick(rng), pick(rng)});
    quads.push_back({mu, nu, mu, pick(rng)});
  }
  const auto rep = semimetric_check(theta, quads, g);
  CHECK(rep.cases.front().exact == 0.0);
  CHECK(rep.max_excess_general <= 1e-3);
  CHECK(rep.max_excess_parametric <= 1e-3);

  // Bandwidth-only and rotation-only perturbations in a general family.
  auto G = make_base_kernel(Profile::triweight, 2, 0);
  FamilySpec gs;
  gs.dim = 2;
  gs.h_min = 0.1;
  gs.h_max = 0.33;
  std::vector<KernelParam> ps{param(G, {0.2, 0.3, 1}), param(G, {0.22, 0.33, 1}),
                              param(G, {0.2, 0.3, 1}, 0.05), param(G, {0.1, 0.1, 1})};
  auto th = make_theta_from_params(gs, ps);
  auto g2 = make_grid(2, 128, theta_margin(th));
  const auto r2 = semimetric_check(th, {{3, 0, 3, 1}, {3, 0, 3, 2}, {0, 0, 0, 2}}, g2);
  for (const auto& c : r2.cases) {
    CHECK(c.exact > 0);
    CHECK(c.exact <= c.parametric);
    CHECK(c.exact <= c.general * (1 + 1e-12));
  }
}
