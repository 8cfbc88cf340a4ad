#include "ptsel/func_classes.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace ptsel;

namespace {

constexpr double kPi = 3.14159265358979323846;

double eval1(const TestFunction& f, double s) { return f(Point{s, 0, 0}); }

} // namespace

TEST_CASE("strict floor")
{
  CHECK(floor_strict(1.0) == 0);
  CHECK(floor_strict(2.0) == 1);
  CHECK(floor_strict(0.5) == 0);
  CHECK(floor_strict(2.5) == 2);
}

TEST_CASE("cusp members")
{
  const auto f = make_holder_1d(1.0, 1.0, HolderShape::cusp);
  double worst = 0.0;
  const int n = 4096;
  for (int k = 0; k < n; ++k) {
    const double a = -0.5 + double(k) / n, b = a + 1.0 / n;
    worst = std::max(worst, std::abs(eval1(f, b) - eval1(f, a)) * n);
  }
  CHECK(worst <= 1.0 * (1 + 1e-3));

  const auto z = make_holder_1d(0.7, 0.0, HolderShape::cusp, 3);
  for (double s : {-0.4, 0.0, 0.2})
    CHECK(eval1(z, s) == 0.0);

  const auto half = make_holder_1d(0.5, 1.0, HolderShape::cusp);
  const auto rep = verify_membership(half);
  CHECK(rep.constant >= 0.9);
  CHECK(rep.constant <= 1.05);
  CHECK(rep.pass);

  CHECK_THROWS_AS(make_holder_1d(1.5, 1.0, HolderShape::cusp), std::invalid_argument);
  CHECK_THROWS_AS(make_holder_1d(0.0, 1.0, HolderShape::trig), std::invalid_argument);
}

TEST_CASE("trig members")
{
  for (std::uint64_t seed : {0ULL, 5ULL}) {
    const auto f = make_holder_1d(2.0, 1.5, HolderShape::trig, seed);
    // Second derivative by an independent five-point formula.
    const double eta = 1e-3;
    double worst = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double t = -0.5 + k / 400.0;
      const double d2 = (-eval1(f, t + 2 * eta) + 16 * eval1(f, t + eta) - 30 * eval1(f, t) +
                         16 * eval1(f, t - eta) - eval1(f, t - 2 * eta)) /
                        (12 * eta * eta);
      worst = std::max(worst, std::abs(d2));
    }
    CHECK(worst <= 1.5 * (1 + 1e-6));
    CHECK(verify_membership(f).pass);
    for (double a : {0.3, 1.0, 1.7, 3.0})
      CHECK(verify_membership(make_holder_1d(a, 1.0, HolderShape::trig, seed)).pass);
  }
}

TEST_CASE("single-index functions")
{
  const auto f = make_holder_1d(1.0, 1.0, HolderShape::cusp, 0);
  const auto F1 = make_single_index(f, {1.0, 0.0});
  CHECK(F1(Point{0.3, -0.2, 0}) == F1(Point{0.3, 0.4, 0}));
  CHECK(F1(Point{0.3, 0.1, 0}) == eval1(f, 0.3));

  const double r = 1.0 / std::sqrt(2.0);
  const auto F = make_single_index(make_holder_1d(0.8, 2.0, HolderShape::cusp, 7), {r, r});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int k = 0; k < 100; ++k) {
    const Point t{u(rng), u(rng), 0};
    const double s = u(rng);
    const Point tv{t[0] + s * r, t[1] - s * r, 0};
    CHECK(std::abs(F(t) - F(tv)) <= 1e-12);
  }
  const auto rf = verify_membership(make_holder_1d(0.8, 2.0, HolderShape::cusp, 7));
  const auto rF = verify_membership(F);
  CHECK(rF.constant == doctest::Approx(rf.constant).epsilon(1e-3));
  CHECK(rF.pass);
  CHECK_THROWS_AS(make_single_index(f, {1.0, 1e-5}), std::invalid_argument);
}

TEST_CASE("anisotropic members")
{
  CHECK(aniso_gamma({1.0, 2.0}) == doctest::Approx(2.0 / 3.0));
  const auto F = make_aniso_holder({1.0, 2.0}, 1.0, 0);
  const auto rep = verify_membership(F);
  CHECK(rep.pass);
  REQUIRE(rep.per_axis.size() == 2);
  CHECK(rep.per_axis[0] <= 0.5 * 1.05);
  CHECK(rep.per_axis[1] <= 0.5 * 1.05);

  // Equal exponents: each axis is the univariate generator with constant L/d.
  const auto G = make_aniso_holder({0.6, 0.6}, 2.0, 0);
  const auto g = make_holder_1d(0.6, 1.0, HolderShape::cusp, 0);
  for (double a : {-0.3, 0.1})
    for (double b : {-0.2, 0.45})
      CHECK(G(Point{a, b, 0}) == doctest::Approx(eval1(g, a) + eval1(g, b)));

  // Per-axis increments checked directly.
  for (int k = 0; k < 50; ++k) {
    const double t = -0.5 + k / 50.0, z = 0.013 * (k % 7 + 1);
    if (t + z > 0.5)
      continue;
    const double inc = std::abs(F(Point{t + z, 0.1, 0}) - F(Point{t, 0.1, 0}));
    CHECK(inc <= 0.5 * z + 1e-12);
  }
}

TEST_CASE("iterated difference coefficients")
{
  CHECK(iterated_difference_coefficients(1) == std::vector<double>{-1, 1});
  CHECK(iterated_difference_coefficients(3) == std::vector<double>{-1, 3, -3, 1});
  // Symbolic check: Delta^3 of t^3 with step a is 6 a^3; of t^2 it is 0.
  const auto c = iterated_difference_coefficients(3);
  const double a = 0.1, x = 0.37;
  double cube = 0, sq = 0;
  for (int j = 0; j <= 3; ++j) {
    cube += c[j] * std::pow(x + j * a, 3);
    sq += c[j] * std::pow(x + j * a, 2);
  }
  CHECK(cube == doctest::Approx(6 * a * a * a));
  CHECK(std::abs(sq) <= 1e-14);
}

TEST_CASE("Besov generator")
{
  CHECK_THROWS_AS(make_besov(1, 0.5, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_besov(2, 1.0, 2.0, 1.0), std::invalid_argument);
  const auto F = make_besov(1, 1.0, 2.0, 1.0, 0);
  const auto rep = verify_membership(F);
  CHECK(rep.constant <= 1.0);
  CHECK(rep.constant >= 0.9);
  CHECK(rep.pass);
  CHECK(besov_functional(F, 1, 0.8, 2.0) <= 1.0 * 1.05);

  const auto F2 = make_besov(2, 1.5, 2.0, 0.5, 3);
  CHECK(verify_membership(F2).pass);

  const auto c = constant_function(1, 4.0);
  CHECK(besov_functional(c, 1, 1.0, 2.0) <= 1e-12);
  CHECK(verify_membership(c).constant == 0.0);
}

TEST_CASE("registry")
{
  FunctionSpec s;
  s.kind = "single_index";
  s.dim = 2;
  s.omega = {1, 1};
  s.alpha = 1.0;
  const auto F = make_function(s);
  CHECK(F.dim() == 2);
  CHECK(F.params().cls == FunctionClass::single_index);
  CHECK(F(Point{0.2, -0.2, 0}) == doctest::Approx(0.0).epsilon(1e-15));
  s.kind = "nope";
  CHECK_THROWS_AS(make_function(s), std::invalid_argument);
  (void)kPi;
}
