#include "ptsel/func_classes.hpp"

#include "ptsel/rng.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ptsel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kTrigTerms = 3;

// sup_{u > 0} 2 |sin(u / 2)| / u^beta
double holder_sine_constant(double beta)
{
  if (beta >= 1.0)
    return 1.0;
  auto neg = [beta](double u) { return -2.0 * std::sin(0.5 * u) / std::pow(u, beta); };
  const auto r = boost::math::tools::brent_find_minima(neg, 1e-9, kPi, 52);
  return -r.second;
}

std::vector<double> log_shifts(double lo, double hi, int count)
{
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k)
    out[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
  return out;
}

// m-th derivative by a centred difference of width eta per step.
double fd_derivative(const std::function<double(double)>& g, double t, int m)
{
  if (m == 0)
    return g(t);
  static const double eta_for[] = {0.0, 1e-5, 2e-4, 1e-3, 3e-3};
  const double eta = eta_for[std::min(m, 4)];
  const auto c = iterated_difference_coefficients(m);
  double acc = 0.0;
  for (int j = 0; j <= m; ++j)
    acc += c[j] * g(t + (j - 0.5 * m) * eta);
  return acc / std::pow(eta, m);
}

// Class constant of a univariate function on [-1/2, 1/2]:
// max(sup |g^(k)|, k = 1..m; Hölder ratio of g^(m) with exponent alpha - m).
double holder_constant_1d(const std::function<double(double)>& g, double alpha, int n)
{
  const int m = floor_strict(alpha);
  const double beta = alpha - m;
  std::vector<double> t(n + 1), dm(n + 1);
  for (int k = 0; k <= n; ++k)
    t[k] = -0.5 + static_cast<double>(k) / n;
  double out = 0.0;
  for (int mm = 1; mm <= m; ++mm)
    for (double tk : t)
      out = std::max(out, std::abs(fd_derivative(g, tk, mm)));
  for (int k = 0; k <= n; ++k)
    dm[k] = fd_derivative(g, t[k], m);
  // Shifts are multiples of the probe spacing so both ends are probe nodes.
  for (double z : log_shifts(2.0 / n, 0.25, 24)) {
    const int s = std::max(2, static_cast<int>(std::lround(z * n)));
    const double zz = static_cast<double>(s) / n;
    for (int k = 0; k + s <= n; ++k)
      out = std::max(out, std::abs(dm[k + s] - dm[k]) / std::pow(zz, beta));
  }
  return out;
}

Point pt(double a, double b = 0, double c = 0) { return Point{a, b, c}; }

} // namespace

HolderShape parse_shape(std::string_view s)
{
  if (s == "cusp")
    return HolderShape::cusp;
  if (s == "trig")
    return HolderShape::trig;
  throw std::invalid_argument("unknown Hölder shape: " + std::string(s));
}

int floor_strict(double alpha)
{
  const double f = std::floor(alpha);
  return static_cast<int>(f == alpha ? f - 1 : f);
}

TestFunction make_holder_1d(double alpha, double L, HolderShape shape, std::uint64_t seed)
{
  if (!(alpha > 0) || !(L >= 0))
    throw std::invalid_argument("make_holder_1d: need alpha > 0 and L >= 0");
  ClassParams cp;
  cp.cls = FunctionClass::holder_1d;
  cp.alpha = alpha;
  cp.L = L;
  std::mt19937_64 rng(derive_seed(seed, 0, StreamRole::function));
  std::ostringstream notes;

  if (shape == HolderShape::cusp) {
    if (alpha > 1.0)
      throw std::invalid_argument("make_holder_1d: cusp shape supports alpha <= 1");
    const double t0 = seed == 0 ? 0.0 : std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
    notes << "L|t - t0|^alpha, t0 = " << t0;
    auto f = [=](const Point& t) { return L * std::pow(std::abs(t[0] - t0), alpha); };
    return TestFunction(1, f, cp, "cusp", notes.str());
  }

  const int m = floor_strict(alpha);
  const double beta = alpha - m;
  const double cb = holder_sine_constant(beta);
  std::vector<double> A(kTrigTerms), w(kTrigTerms), phi(kTrigTerms, 0.0);
  double hold = 0.0;
  std::vector<double> deriv(m + 1, 0.0);
  for (int k = 0; k < kTrigTerms; ++k) {
    w[k] = 2.0 * kPi * (k + 1);
    A[k] = std::pow(k + 1.0, -(alpha + 1.0));
    if (seed != 0)
      phi[k] = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
    hold += A[k] * std::pow(w[k], m + beta) * cb;
    for (int mm = 1; mm <= m; ++mm)
      deriv[mm] += A[k] * std::pow(w[k], mm);
  }
  double bound = hold;
  for (int mm = 1; mm <= m; ++mm)
    bound = std::max(bound, deriv[mm]);
  const double scale = L / bound;
  for (double& a : A)
    a *= scale;
  notes << "sum_k A_k cos(2 pi k t + phi_k), k = 1.." << kTrigTerms;
  auto f = [=](const Point& t) {
    double v = 0.0;
    for (int k = 0; k < kTrigTerms; ++k)
      v += A[k] * std::cos(w[k] * t[0] + phi[k]);
    return v;
  };
  return TestFunction(1, f, cp, "trig", notes.str());
}

TestFunction make_single_index(const TestFunction& f, const std::vector<double>& omega)
{
  if (f.dim() != 1)
    throw std::invalid_argument("make_single_index: f must be univariate");
  const int d = static_cast<int>(omega.size());
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("make_single_index: bad dimension");
  double nn = 0.0;
  for (double v : omega)
    nn += v * v;
  if (std::abs(std::sqrt(nn) - 1.0) > 1e-12)
    throw std::invalid_argument("make_single_index: omega must be a unit vector");
  ClassParams cp = f.params();
  cp.cls = FunctionClass::single_index;
  cp.omega = omega;
  std::array<double, kMaxDim> om{0, 0, 0};
  for (int i = 0; i < d; ++i)
    om[i] = omega[i];
  auto g = [f, om, d](const Point& t) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      s += om[i] * t[i];
    return f(pt(s));
  };
  return TestFunction(d, g, cp, "single_index/" + f.id(), f.notes());
}

TestFunction make_aniso_holder(const std::vector<double>& alpha, double L, std::uint64_t seed)
{
  const int d = static_cast<int>(alpha.size());
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("make_aniso_holder: bad dimension");
  std::vector<TestFunction> parts;
  for (int i = 0; i < d; ++i) {
    const auto shape = alpha[i] <= 1.0 ? HolderShape::cusp : HolderShape::trig;
    parts.push_back(make_holder_1d(alpha[i], L / d, shape, seed == 0 ? 0 : seed + i));
  }
  ClassParams cp;
  cp.cls = FunctionClass::aniso_holder;
  cp.alpha_vec = alpha;
  cp.L = L;
  auto f = [parts, d](const Point& t) {
    double v = 0.0;
    for (int i = 0; i < d; ++i)
      v += parts[i](pt(t[i]));
    return v;
  };
  return TestFunction(d, f, cp, "aniso", "sum of per-axis members with constant L/d");
}

double aniso_gamma(const std::vector<double>& alpha)
{
  double s = 0.0;
  for (double a : alpha) {
    if (!(a > 0))
      throw std::invalid_argument("aniso_gamma: alpha_i must be positive");
    s += 1.0 / a;
  }
  return 1.0 / s;
}

std::vector<double> iterated_difference_coefficients(int l)
{
  std::vector<double> c(l + 1);
  for (int j = 0; j <= l; ++j)
    c[j] = boost::math::binomial_coefficient<double>(l, j) * ((l - j) % 2 ? -1.0 : 1.0);
  return c;
}

double besov_functional(const TestFunction& F, int d, double s, double p, int resolution)
{
  const int l = floor_strict(s) + 2;
  const auto c = iterated_difference_coefficients(l);
  const int n = d == 1 ? resolution : d == 2 ? resolution : std::min(resolution, 32);
  std::vector<Point> nodes;
  const long total = static_cast<long>(std::pow(n, d));
  nodes.reserve(total);
  for (long f = 0; f < total; ++f) {
    Point t{0, 0, 0};
    long r = f;
    for (int i = d - 1; i >= 0; --i) {
      t[i] = -0.5 + (r % n + 0.5) / n;
      r /= n;
    }
    nodes.push_back(t);
  }
  std::vector<Point> dirs;
  if (d == 1) {
    dirs = {pt(1), pt(-1)};
  } else if (d == 2) {
    for (int k = 0; k < 16; ++k)
      dirs.push_back(pt(std::cos(2 * kPi * k / 16), std::sin(2 * kPi * k / 16)));
  } else {
    for (int i = 0; i < 3; ++i)
      for (double sg : {1.0, -1.0}) {
        Point u{0, 0, 0};
        u[i] = sg;
        dirs.push_back(u);
      }
    const double r3 = 1.0 / std::sqrt(3.0);
    for (int k = 0; k < 8; ++k)
      dirs.push_back(pt(k & 1 ? r3 : -r3, k & 2 ? r3 : -r3, k & 4 ? r3 : -r3));
  }
  double out = 0.0;
  for (double r : log_shifts(2.0 / n, 0.25, 24))
    for (const Point& u : dirs) {
      double acc = 0.0;
      for (const Point& t : nodes) {
        double v = 0.0;
        for (int j = 0; j <= l; ++j) {
          Point y = t;
          for (int i = 0; i < d; ++i)
            y[i] += j * r * u[i];
          v += c[j] * F(y);
        }
        acc += std::pow(std::abs(v), p);
      }
      out = std::max(out, std::pow(acc / total, 1.0 / p) / std::pow(r, s));
    }
  return out;
}

TestFunction make_besov(int d, double s, double p, double L, std::uint64_t seed,
                        int probe_resolution)
{
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("make_besov: bad dimension");
  if (!(p >= 1))
    throw std::invalid_argument("make_besov: need p >= 1");
  if (!(s > d / p))
    throw std::invalid_argument("make_besov: need s > d/p");
  if (!(L > 0))
    throw std::invalid_argument("make_besov: need L > 0");
  constexpr int kScales = 8;
  std::mt19937_64 rng(derive_seed(seed, 0, StreamRole::function));
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  struct Bump
  {
    Point c;
    double inv_radius, amp;
  };
  std::vector<Bump> bumps;
  for (int j = 0; j < kScales; ++j) {
    Bump b;
    b.c = Point{0, 0, 0};
    for (int i = 0; i < d; ++i)
      b.c[i] = j == 0 && seed == 0 ? 0.0 : u(rng);
    b.inv_radius = 4.0 * std::pow(2.0, j);
    b.amp = std::pow(2.0, -j * (s - d / p));
    bumps.push_back(b);
  }
  auto make = [bumps, d](double scale) {
    return [bumps, d, scale](const Point& t) {
      double v = 0.0;
      for (const auto& b : bumps) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
          const double z = (t[i] - b.c[i]) * b.inv_radius;
          r2 += z * z;
        }
        if (r2 < 1.0)
          v += b.amp * std::exp(1.0 - 1.0 / (1.0 - r2));
      }
      return scale * v;
    };
  };
  ClassParams cp;
  cp.cls = FunctionClass::besov;
  cp.s = s;
  cp.p = p;
  cp.L = L;
  const double phi1 = besov_functional(TestFunction(d, make(1.0), cp, "besov"), d, s, p,
                                       probe_resolution);
  double scale = 0.99 * L / phi1;
  for (int it = 0; it < 20; ++it) {
    TestFunction F(d, make(scale), cp, "besov");
    if (besov_functional(F, d, s, p, probe_resolution) <= L) {
      std::ostringstream notes;
      notes << kScales << " bump scales, amplitude scale " << scale;
      return TestFunction(d, make(scale), cp, "besov", notes.str());
    }
    scale *= 0.9;
  }
  throw std::runtime_error("make_besov: verification failed after shrinking");
}

MembershipReport verify_membership(const TestFunction& F, int resolution, double slack)
{
  if (resolution < 128)
    throw std::invalid_argument("verify_membership: resolution must be >= 128");
  const ClassParams& cp = F.params();
  MembershipReport rep;
  rep.cls = cp.cls;
  rep.L = cp.L;
  const int d = F.dim();
  switch (cp.cls) {
    case FunctionClass::constant:
    case FunctionClass::holder_1d: {
      const double alpha = cp.cls == FunctionClass::constant ? 1.0 : cp.alpha;
      rep.constant = holder_constant_1d([&](double s) { return F(pt(s)); }, alpha, resolution);
      rep.per_axis = {rep.constant};
      break;
    }
    case FunctionClass::single_index: {
      const auto& om = cp.omega;
      rep.constant = holder_constant_1d(
        [&](double s) {
          Point t{0, 0, 0};
          for (int i = 0; i < d; ++i)
            t[i] = s * om[i];
          return F(t);
        },
        cp.alpha, resolution);
      rep.per_axis = {rep.constant};
      break;
    }
    case FunctionClass::aniso_holder: {
      const int coarse = std::min(resolution, 16);
      rep.per_axis.assign(d, 0.0);
      const long others = static_cast<long>(std::pow(coarse + 1, d - 1));
      for (int i = 0; i < d; ++i)
        for (long f = 0; f < others; ++f) {
          Point base{0, 0, 0};
          long r = f;
          for (int k = 0; k < d; ++k) {
            if (k == i)
              continue;
            base[k] = -0.5 + static_cast<double>(r % (coarse + 1)) / coarse;
            r /= coarse + 1;
          }
          const double c = holder_constant_1d(
            [&](double s) {
              Point t = base;
              t[i] = s;
              return F(t);
            },
            cp.alpha_vec[i], resolution);
          rep.per_axis[i] = std::max(rep.per_axis[i], c);
        }
      for (double c : rep.per_axis)
        rep.constant = std::max(rep.constant, c);
      break;
    }
    case FunctionClass::besov:
      rep.constant = besov_functional(F, d, cp.s, cp.p, resolution);
      break;
    case FunctionClass::custom:
      throw std::invalid_argument("verify_membership: function has no class tag");
  }
  rep.pass = rep.constant <= cp.L * (1.0 + slack) + 1e-12;
  return rep;
}

TestFunction make_function(const FunctionSpec& s)
{
  if (s.kind == "constant") {
    auto F = constant_function(s.dim, s.value);
    return F;
  }
  if (s.kind == "cusp" || s.kind == "trig")
    return make_holder_1d(s.alpha, s.L, parse_shape(s.kind), s.seed);
  if (s.kind == "single_index") {
    std::vector<double> om = s.omega;
    if (om.empty()) {
      om.assign(s.dim, 0.0);
      om[0] = 1.0;
    }
    double nn = 0.0;
    for (double v : om)
      nn += v * v;
    for (double& v : om)
      v /= std::sqrt(nn);
    return make_single_index(make_holder_1d(s.alpha, s.L, parse_shape(s.inner), s.seed), om);
  }
  if (s.kind == "aniso")
    return make_aniso_holder(s.alpha_vec, s.L, s.seed);
  if (s.kind == "besov")
    return make_besov(s.dim, s.s, s.p, s.L, s.seed);
  throw std::invalid_argument("unknown function kind: " + s.kind);
}

} // namespace ptsel
