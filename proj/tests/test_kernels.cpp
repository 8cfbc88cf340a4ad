#include "ptsel/base_kernel.hpp"
#include "ptsel/kernel_param.hpp"
#include "ptsel/stencil.hpp"
#include "ptsel/theta_grid.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <random>

using namespace ptsel;

namespace {

constexpr double kPi = 3.14159265358979323846;

// composite 8-point Gauss-Legendre on [a, b] with `panels` panels
template <class F>
double composite_gl(F&& f, double a, double b, int panels)
{
  double w = (b - a) / panels, s = 0.0;
  for (int p = 0; p < panels; ++p)
    s += boost::math::quadrature::gauss<double, 8>::integrate(f, a + p * w, a + (p + 1) * w);
  return s;
}

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

} // namespace

TEST_CASE("order-0 kernel is the even product of 2 k(2t)")
{
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  CHECK(G->terms().size() == 1);
  CHECK(G->support_radius() == 0.5);
  auto rep = validate_moments(*G, 0);
  CHECK(rep.ok());
  CHECK(rep.mass_error <= 1e-12);
  CHECK(std::abs(G->moment({1, 0, 0})) <= 1e-15);
  CHECK((*G)(Point{0.1, 0, 0}) == doctest::Approx(2 * profile::value(Profile::triweight, 0.2)));
}

TEST_CASE("higher-order coefficients are the alternating binomials over j^d")
{
  for (int d = 1; d <= 3; ++d) {
    auto G = make_base_kernel(Profile::quartic, d, 2);
    auto c = G->g_coefficients();
    REQUIRE(c.size() == 3);
    CHECK(c[0] == doctest::Approx(3.0));
    CHECK(c[1] == doctest::Approx(-3.0 / std::pow(2.0, d)));
    CHECK(c[2] == doctest::Approx(1.0 / std::pow(3.0, d)));
  }
}

TEST_CASE("second moment of the order-2 quartic kernel vanishes (10^4-node oracle)")
{
  auto G = make_base_kernel(Profile::quartic, 1, 2);
  auto g = [&](double t) { return (*G)(Point{t, 0, 0}); };
  double m0 = composite_gl(g, -0.5, 0.5, 1250);
  double m1 = composite_gl([&](double t) { return t * g(t); }, -0.5, 0.5, 1250);
  double m2 = composite_gl([&](double t) { return t * t * g(t); }, -0.5, 0.5, 1250);
  double m3 = composite_gl([&](double t) { return t * t * t * g(t); }, -0.5, 0.5, 1250);
  CHECK(std::abs(m0 - 1.0) <= 1e-8);
  CHECK(std::abs(m1) <= 1e-6);
  CHECK(std::abs(m2) <= 1e-6);
  CHECK(std::abs(m3) <= 1e-6);
  // the fourth moment does not vanish for a three-term combination
  double m4 = composite_gl([&](double t) { return std::pow(t, 4) * g(t); }, -0.5, 0.5, 1250);
  CHECK(std::abs(m4) > 1e-6);
}

TEST_CASE("moment checks pass for every profile, order and dimension")
{
  for (auto p : {Profile::box_smooth, Profile::quartic, Profile::triweight})
    for (int d = 1; d <= 3; ++d)
      for (int l = 0; l <= 4; ++l) {
        auto G = make_base_kernel(p, d, l);
        auto rep = validate_moments(*G, l);
        CHECK(rep.ok());
        CHECK(rep.mass_error <= 1e-8);
        CHECK(rep.max_moment <= 1e-6);
        CHECK(G->support_radius() <= 0.5);
      }
}

TEST_CASE("support is contained in the half cube")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto p : {Profile::box_smooth, Profile::quartic, Profile::triweight}) {
    auto G = make_base_kernel(p, 2, 3);
    for (int k = 0; k < 2000; ++k) {
      Point t{u(rng), u(rng), 0.0};
      if (std::abs(t[0]) >= 0.5 || std::abs(t[1]) >= 0.5)
        CHECK((*G)(t) == 0.0);
    }
  }
}

TEST_CASE("gradient bound dominates the gradient on a dense probe grid")
{
  for (auto p : {Profile::box_smooth, Profile::quartic, Profile::triweight})
    for (int l : {0, 1, 3}) {
      auto G = make_base_kernel(p, 2, l);
      double worst = 0.0;
      for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
          Point t{-0.5 + i / 200.0, -0.5 + j / 200.0, 0.0};
          auto g = G->gradient(t);
          worst = std::max(worst, std::hypot(g[0], g[1]));
        }
      CHECK(worst <= G->grad_bound());
      CHECK(worst > 0.2 * G->grad_bound()); // bound is not vacuous
    }
}

TEST_CASE("analytic gradient matches finite differences")
{
  auto G = make_base_kernel(Profile::triweight, 2, 1);
  Point t{0.11, -0.07, 0};
  auto g = G->gradient(t);
  double h = 1e-6;
  double fx = ((*G)(Point{t[0] + h, t[1], 0}) - (*G)(Point{t[0] - h, t[1], 0})) / (2 * h);
  double fy = ((*G)(Point{t[0], t[1] + h, 0}) - (*G)(Point{t[0], t[1] - h, 0})) / (2 * h);
  CHECK(g[0] == doctest::Approx(fx).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(fy).epsilon(1e-6));
}

TEST_CASE("norms: closed forms against direct quadrature")
{
  // ||2k(2t)||_2^2 = 2 (35/32)^2 int (1-u^2)^6 = 2 (35/32)^2 2^13 (6!)^2 / 13!
  double tri_l2sq = 2 * std::pow(35.0 / 32.0, 2) * 8192.0 * 518400.0 / 6227020800.0;
  auto T = make_base_kernel(Profile::triweight, 1, 0);
  CHECK(T->norm_l2() == doctest::Approx(std::sqrt(tri_l2sq)).epsilon(1e-12));
  CHECK(T->norm_l1() == doctest::Approx(1.0).epsilon(1e-14));
  auto T2 = make_base_kernel(Profile::triweight, 2, 0);
  CHECK(T2->norm_l2() == doctest::Approx(tri_l2sq).epsilon(1e-12));

  for (auto p : {Profile::box_smooth, Profile::quartic})
    for (int l : {0, 1, 2}) {
      auto G = make_base_kernel(p, 1, l);
      auto g = [&](double t) { return (*G)(Point{t, 0, 0}); };
      double l1 = composite_gl([&](double t) { return std::abs(g(t)); }, -0.5, 0.5, 4000);
      double l2 = std::sqrt(composite_gl([&](double t) { return g(t) * g(t); }, -0.5, 0.5, 4000));
      CHECK(G->norm_l1() == doctest::Approx(l1).epsilon(1e-7));
      CHECK(G->norm_l2() == doctest::Approx(l2).epsilon(1e-9));
      if (l > 0)
        CHECK(G->norm_l1() > 1.0);
    }

  auto G2 = make_base_kernel(Profile::quartic, 2, 1);
  double s1 = 0, s2 = 0;
  int m = 600;
  double h = 1.0 / m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double v = (*G2)(Point{-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h, 0});
      s1 += std::abs(v) * h * h;
      s2 += v * v * h * h;
    }
  CHECK(G2->norm_l1() == doctest::Approx(s1).epsilon(1e-4));
  CHECK(G2->norm_l2() == doctest::Approx(std::sqrt(s2)).epsilon(1e-4));
}

TEST_CASE("custom term lists are validated")
{
  CHECK_NOTHROW(make_base_kernel_from_terms(Profile::quartic, 1, 0, {{1.0, 0.5}}));
  CHECK_THROWS_WITH_AS(make_base_kernel_from_terms(Profile::quartic, 1, 0, {{1.5, 0.5}}),
                       doctest::Contains("multi-index (0)"), std::domain_error);
  CHECK_THROWS_WITH_AS(make_base_kernel_from_terms(Profile::quartic, 2, 2, {{1.0, 0.5}}),
                       doctest::Contains("multi-index (0,2)"), std::domain_error);
  CHECK_THROWS_AS(make_base_kernel_from_terms(Profile::quartic, 1, 0, {{1.0, 0.7}}),
                  std::invalid_argument);
}

TEST_CASE("eval_kernel scaling and rotation identities")
{
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  auto mu1 = param(G, {1.0, 1.0, 1.0});
  CHECK(eval_kernel(mu1, Point{0.3, 0, 0}, Point{0.3, 0, 0}) == doctest::Approx((*G)(Point{0, 0, 0})));
  auto mu = param(G, {0.5, 1, 1});
  CHECK(eval_kernel(mu, Point{0.35, 0, 0}, Point{0.25, 0, 0}) ==
        doctest::Approx(2 * (*G)(Point{0.2, 0, 0})));

  auto G2 = make_base_kernel(Profile::quartic, 2, 0);
  auto rot = param(G2, {0.3, 0.2, 1}, kPi / 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int k = 0; k < 100; ++k) {
    Point t{u(rng), u(rng), 0}, x{u(rng) / 4, u(rng) / 4, 0};
    double a = t[0] - x[0], b = t[1] - x[1];
    // E^T (a, b) = (b, -a) for a quarter turn
    double direct = (*G2)(Point{b / 0.3, -a / 0.2, 0}) / (0.3 * 0.2);
    CHECK(eval_kernel(rot, t, x) == doctest::Approx(direct).epsilon(1e-13));
  }
  auto E = rot.rotation();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = E[0][i] * E[0][j] + E[1][i] * E[1][j];
      CHECK(std::abs(s - (i == j)) <= 1e-12);
    }
}

TEST_CASE("sigma closed forms and quadrature cross-check")
{
  auto G2 = make_base_kernel(Profile::triweight, 2, 0);
  auto mu = param(G2, {0.25, 0.25, 1});
  CHECK(kernel_norms(mu).l2 / G2->norm_l2() == doctest::Approx(4.0).epsilon(1e-14));
  auto unit = param(make_base_kernel(Profile::quartic, 1, 0), {1, 1, 1});
  CHECK(kernel_norms(unit).l2 == doctest::Approx(unit.base->norm_l2()));

  auto g = make_grid(1, 256, 0.5);
  // the narrowest term of an order-l kernel spans h / (l + 1); keep it resolved
  for (double h : {0.1, 0.2, 0.37, 0.5}) {
    for (int l : {0, 2}) {
      if (l > 0 && h < 0.3)
        continue;
      auto m1 = param(make_base_kernel(Profile::box_smooth, 1, l), {h, 1, 1});
      auto q = kernel_norms_quadrature(m1, g);
      auto c = kernel_norms(m1);
      CHECK(std::abs(q.l2 / c.l2 - 1) <= 5e-3);
      CHECK(std::abs(q.l1 / c.l1 - 1) <= 5e-3);
    }
  }
}

TEST_CASE("sigma-tilde: closed form and general-mode quadrature")
{
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  auto mu = param(G, {0.2, 1, 1});
  CHECK(sigma_tilde(mu) == doctest::Approx(kernel_norms(mu).l2));

  auto Gs = make_base_kernel(Profile::quartic, 1, 2);
  auto ms = param(Gs, {0.2, 1, 1});
  CHECK(sigma_tilde(ms) == doctest::Approx(Gs->norm_l1() * kernel_norms(ms).l2));

  FamilySpec spec;
  spec.family = Family::single_index;
  spec.dim = 2;
  spec.h_min = 0.2;
  spec.h_max = 0.5;
  spec.n_angles = 4;
  spec.profile = Profile::triweight;
  auto theta = make_theta_grid(spec);
  auto grid = make_grid(2, 128, 0.5);
  for (std::size_t i = 0; i < theta.size(); i += 3) {
    double q = sigma_tilde_quadrature(theta[i], theta, grid);
    CHECK(std::abs(q / theta.sigma_tilde(i) - 1) <= 1e-3);
  }
}

TEST_CASE("auxiliary kernel is a commutative unit-mass kernel")
{
  auto grid = make_grid(2, 96, 0.5);
  auto G = make_base_kernel(Profile::quartic, 2, 1);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> hu(0.08, 0.3), au(0.0, kPi);
  for (int k = 0; k < 6; ++k) {
    auto mu = param(G, {hu(rng), hu(rng), 1}, au(rng));
    auto nu = param(G, {hu(rng), hu(rng), 1}, k % 2 ? 0.0 : au(rng));
    auto a = convolve_kernels(mu, nu, grid);
    auto b = convolve_kernels(nu, mu, grid);
    CHECK(max_abs_difference(a.profile, b.profile) <= 1e-10);
    double mass = 0;
    for (double v : a.profile.w)
      mass += v;
    CHECK(std::abs(mass - 1) <= 1e-6);
    // cell-sum integral of the density
    Point x{0.0, 0.0, 0};
    double integral = 0;
    for (std::size_t f = 0; f < a.profile.size(); ++f) {
      auto off = a.profile.offset(f);
      integral += a(Point{off[0] * grid.spacing(), off[1] * grid.spacing(), 0}, x) *
                  grid.cell_volume();
    }
    CHECK(std::abs(integral - 1) <= 1e-6);
  }
}

TEST_CASE("delta-like second factor reproduces the first kernel")
{
  auto grid = make_grid(1, 400, 0.5);
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  auto mu = param(G, {0.3, 1, 1});
  auto narrow = param(G, {1.5 * grid.spacing(), 1, 1});
  auto aux = convolve_kernels(mu, narrow, grid);
  auto w = tabulate_stencil(mu, grid.spacing());
  CHECK(max_abs_difference(aux.profile, w) <= 1e-15);
  auto narrow3 = param(G, {3.0 * grid.spacing(), 1, 1});
  auto aux3 = convolve_kernels(mu, narrow3, grid);
  double peak = *std::max_element(w.w.begin(), w.w.end());
  CHECK(max_abs_difference(aux3.profile, w) <= 2e-3 * peak);
}

TEST_CASE("auxiliary support overflow names the required margin")
{
  auto grid = make_grid(1, 128, 0.2);
  auto G = make_base_kernel(Profile::triweight, 1, 0);
  auto mu = param(G, {0.4, 1, 1});
  CHECK_THROWS_WITH_AS(convolve_kernels(mu, mu, grid), doctest::Contains("margin must be >="),
                       std::out_of_range);
}

TEST_CASE("every family member is a unit-mass kernel supported in D1")
{
  auto grid = make_grid(2, 256, 0.5);
  FamilySpec spec;
  spec.family = Family::general;
  spec.dim = 2;
  spec.h_min = 0.12;
  spec.h_max = 0.5;
  spec.n_angles = 5;
  spec.profile = Profile::box_smooth;
  spec.order = 1;
  auto theta = make_theta_grid(spec);
  for (const auto& mu : theta.params()) {
    auto w = tabulate_stencil(mu, grid.spacing());
    CHECK(w.max_radius() * grid.spacing() <= 0.5 * std::sqrt(2.0) * 0.5 + 1e-12);
    double mass = 0;
    for (double v : w.w)
      mass += v;
    CHECK(std::abs(mass - 1) <= 1e-12);
  }
  // raw cell sums of the continuum kernel before renormalization, for members
  // resolved by at least 24 cells per half-width
  spec.profile = Profile::triweight;
  spec.order = 0;
  spec.h_min = 0.4;
  auto resolved = make_theta_grid(spec);
  for (const auto& mu : resolved.params()) {
    auto w = tabulate_stencil(mu, grid.spacing());
    double raw = 0;
    for (std::size_t f = 0; f < w.size(); ++f) {
      auto k = w.offset(f);
      raw += eval_kernel(mu, Point{k[0] * grid.spacing(), k[1] * grid.spacing(), 0},
                         Point{0, 0, 0}) * grid.cell_volume();
    }
    CHECK(std::abs(raw - 1) <= 1e-6);
  }
}

TEST_CASE("single-index grid: closed-form extrema and level structure")
{
  FamilySpec spec;
  spec.family = Family::single_index;
  spec.dim = 2;
  spec.h_min = 0.03;
  spec.h_max = 0.5;
  spec.profile = Profile::triweight;
  auto theta = make_theta_grid(spec);
  const auto& G = *theta.base();
  double smin = G.norm_l1() * G.norm_l2() / spec.h_max;
  double smax = G.norm_l1() * G.norm_l2() / std::sqrt(spec.h_max * spec.h_min);
  CHECK(std::abs(theta.sigma_min() - smin) <= 1e-10 * smin);
  CHECK(std::abs(theta.sigma_max() - smax) <= 1e-10 * smax);
  CHECK(theta.M_K() >= 1.0);
  int n_ang = static_cast<int>(std::ceil(kPi * 0.25 / 0.03));
  CHECK(theta.size() % std::size_t(n_ang) == 0);
  for (std::size_t k = 1; k < theta.levels().size(); ++k) {
    CHECK(theta.levels()[k] > theta.levels()[k - 1]);
    CHECK(theta.levels()[k] / theta.levels()[k - 1] <= std::pow(2.0, 0.25) + 1e-12);
  }
  for (const auto& mu : theta.params()) {
    CHECK(mu.h[1] == spec.h_max);
    CHECK(mu.h[0] >= spec.h_min);
  }
  // sigma does not depend on the angle: one level per bandwidth
  CHECK(theta.levels().size() * std::size_t(n_ang) == theta.size());
}

TEST_CASE("anisotropic and Besov family constraints")
{
  FamilySpec ah;
  ah.family = Family::aniso_holder;
  ah.dim = 2;
  ah.h_min = 0.01;
  ah.h_max = 0.5;
  ah.gamma = 2.0 / 3.0;
  ah.phi = 0.05;
  auto theta = make_theta_grid(ah);
  CHECK(theta.levels().size() == 1);
  CHECK(theta.size() > 3);
  for (const auto& mu : theta.params()) {
    double prod = std::pow(mu.h[0], ah.gamma) * std::pow(mu.h[1], ah.gamma);
    CHECK(std::abs(prod - ah.phi) <= 1e-10);
    CHECK(mu.angle == 0.0);
  }
  ah.dim = 3;
  ah.phi = 0.02;
  auto theta3 = make_theta_grid(ah);
  for (const auto& mu : theta3.params())
    CHECK(std::abs(std::pow(mu.h[0] * mu.h[1] * mu.h[2], ah.gamma) - ah.phi) <= 1e-10);

  FamilySpec b;
  b.family = Family::besov;
  b.dim = 2;
  b.h_min = 0.05;
  b.h_max = 0.4;
  b.order = 1;
  auto tb = make_theta_grid(b);
  for (const auto& mu : tb.params())
    CHECK(mu.h[0] == mu.h[1]);
  for (std::size_t k = 1; k < tb.levels().size(); ++k)
    CHECK(tb.levels()[k] / tb.levels()[k - 1] <= std::pow(2.0, 0.25) + 1e-12);

  KernelParam bad = tb[0];
  bad.h[1] *= 0.9;
  CHECK_THROWS_AS(validate_param(bad, b), std::invalid_argument);
  KernelParam rotated = tb[0];
  rotated.angle = 0.3;
  CHECK_THROWS_AS(validate_param(rotated, b), std::invalid_argument);
  ah.phi = 1e-9;
  ah.dim = 2;
  CHECK_THROWS_AS(make_theta_grid(ah), std::invalid_argument);
}

TEST_CASE("geometric ladder hits both ends")
{
  auto h = geometric_ladder(0.01, 0.5, std::pow(2.0, -0.5));
  CHECK(h.front() == 0.5);
  CHECK(h.back() == 0.01);
  for (std::size_t k = 1; k < h.size(); ++k)
    CHECK(h[k - 1] / h[k] <= std::sqrt(2.0) + 1e-12);
  CHECK(geometric_ladder(0.3, 0.3, 0.5).size() == 1);
}
