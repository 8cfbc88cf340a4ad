#include "ptsel/theta_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ptsel {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLevelTol = 1e-12;

bool lex_less(const KernelParam& a, const KernelParam& b)
{
  for (int i = 0; i < a.dim; ++i)
    if (a.h[i] != b.h[i])
      return a.h[i] < b.h[i];
  return a.angle < b.angle;
}

std::vector<double> angle_grid(const FamilySpec& spec)
{
  if (!family_rotates(spec.family, spec.dim))
    return {0.0};
  int n = spec.n_angles;
  if (n <= 0)
    n = std::min(spec.max_angles,
                 static_cast<int>(std::ceil(kPi * spec.angle_density / spec.h_min)));
  n = std::max(n, 1);
  std::vector<double> a(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    a[static_cast<std::size_t>(k)] = kPi * k / n;
  return a;
}

} // namespace

std::vector<double> geometric_ladder(double h_min, double h_max, double min_ratio)
{
  if (!(h_min > 0) || !(h_max >= h_min))
    throw std::invalid_argument("geometric_ladder: need 0 < h_min <= h_max");
  if (!(min_ratio > 0 && min_ratio < 1))
    throw std::invalid_argument("geometric_ladder: ratio must lie in (0, 1)");
  double span = std::log(h_max / h_min);
  int K = static_cast<int>(std::ceil(span / -std::log(min_ratio) - 1e-12));
  if (K <= 0)
    return {h_max};
  double q = std::pow(h_min / h_max, 1.0 / K);
  std::vector<double> h(static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k)
    h[static_cast<std::size_t>(k)] = h_max * std::pow(q, k);
  h.back() = h_min;
  return h;
}

double sigma_tilde(const KernelParam& mu)
{
  auto n = kernel_norms(mu);
  return n.l1 * n.l2;
}

void validate_param(const KernelParam& mu, const FamilySpec& spec)
{
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("kernel parameter " + mu.describe() + ": " + what);
  };
  if (mu.dim != spec.dim)
    fail("dimension mismatch");
  const double tol = 1e-12;
  for (int i = 0; i < mu.dim; ++i)
    if (mu.h[i] < spec.h_min * (1 - tol) || mu.h[i] > spec.h_max * (1 + tol))
      fail("bandwidth outside [h_min, h_max]");
  bool identity = mu.dim != 2 || mu.angle == 0.0;
  switch (spec.family) {
  case Family::single_index:
    for (int i = 1; i < mu.dim; ++i)
      if (mu.h[i] != spec.h_max)
        fail("single-index members need h_i = h_max for i > 1");
    break;
  case Family::aniso_holder: {
    if (!identity)
      fail("anisotropic family requires E = I");
    double prod = 1.0;
    for (int i = 0; i < mu.dim; ++i)
      prod *= std::pow(mu.h[i], spec.gamma);
    if (std::abs(prod - spec.phi) > 1e-10 * std::max(1.0, spec.phi))
      fail("prod h_i^gamma differs from phi");
    break;
  }
  case Family::besov:
    if (!identity)
      fail("Besov family requires E = I");
    for (int i = 1; i < mu.dim; ++i)
      if (mu.h[i] != mu.h[0])
        fail("Besov family requires equal bandwidths");
    break;
  default:
    break;
  }
  if (mu.dim == 2 && (mu.angle < 0 || mu.angle >= kPi))
    fail("angle outside [0, pi)");
}

ThetaGrid::ThetaGrid(FamilySpec spec, std::vector<KernelParam> params)
  : spec_(std::move(spec))
  , params_(std::move(params))
{
  if (params_.empty())
    throw std::invalid_argument("ThetaGrid: empty parameter set");
  base_ = params_.front().base;
  std::size_t n = params_.size();
  sigma_.resize(n);
  sigma_tilde_.resize(n);
  M_K_ = 0.0;
  sigma_K_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto nm = kernel_norms(params_[i]);
    sigma_[i] = nm.l2;
    sigma_tilde_[i] = nm.l1 * nm.l2;
    M_K_ = std::max(M_K_, nm.l1);
    sigma_K_ = std::max(sigma_K_, nm.l2);
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (sigma_tilde_[a] != sigma_tilde_[b])
      return sigma_tilde_[a] < sigma_tilde_[b];
    return lex_less(params_[a], params_[b]);
  });
  rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r)
    rank_[order_[r]] = r;

  level_of_.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t i = order_[r];
    double s = sigma_tilde_[i];
    if (levels_.empty() || s > levels_.back() * (1 + kLevelTol))
      levels_.push_back(s);
    level_of_[i] = levels_.size() - 1;
  }
  // members of one level share its representative value exactly
  for (std::size_t i = 0; i < n; ++i)
    sigma_tilde_[i] = levels_[level_of_[i]];
}

bool ThetaGrid::precedes(std::size_t a, std::size_t b) const
{
  return rank_[a] < rank_[b];
}

ThetaGrid make_theta_from_params(const FamilySpec& spec, std::vector<KernelParam> params)
{
  for (const auto& p : params)
    validate_param(p, spec);
  return ThetaGrid(spec, std::move(params));
}

ThetaGrid make_singleton_theta(const KernelParam& mu)
{
  FamilySpec spec;
  spec.family = mu.family;
  spec.dim = mu.dim;
  spec.h_min = *std::min_element(mu.h.begin(), mu.h.begin() + mu.dim);
  spec.h_max = *std::max_element(mu.h.begin(), mu.h.begin() + mu.dim);
  spec.profile = mu.base->profile();
  spec.order = mu.base->order();
  if (mu.family == Family::aniso_holder) {
    spec.phi = 1.0;
    for (int i = 0; i < mu.dim; ++i)
      spec.phi *= std::pow(mu.h[i], spec.gamma);
  }
  return ThetaGrid(spec, {mu});
}

ThetaGrid make_theta_grid(const FamilySpec& spec)
{
  if (spec.dim < 1 || spec.dim > kMaxDim)
    throw std::invalid_argument("make_theta_grid: dimension must be 1..3");
  if (!(spec.h_min > 0) || !(spec.h_max >= spec.h_min) || spec.h_max > 0.5 + 1e-12)
    throw std::invalid_argument("make_theta_grid: need 0 < h_min <= h_max <= 1/2");
  if (!(spec.sigma_ratio > 1))
    throw std::invalid_argument("make_theta_grid: sigma_ratio must exceed 1");
  const int d = spec.dim;
  auto base = make_base_kernel(spec.profile, d, spec.order);
  auto angles = angle_grid(spec);
  const double axis_q = std::pow(spec.sigma_ratio, -2.0);

  std::vector<std::array<double, kMaxDim>> hs;
  switch (spec.family) {
  case Family::general:
  case Family::mixed: {
    auto ladder = geometric_ladder(spec.h_min, spec.h_max, axis_q);
    std::array<std::size_t, kMaxDim> k{0, 0, 0};
    std::size_t L = ladder.size();
    for (k[0] = 0; k[0] < L; ++k[0])
      for (k[1] = 0; k[1] < (d > 1 ? L : 1); ++k[1])
        for (k[2] = 0; k[2] < (d > 2 ? L : 1); ++k[2]) {
          std::array<double, kMaxDim> h{1.0, 1.0, 1.0};
          for (int i = 0; i < d; ++i)
            h[i] = ladder[k[i]];
          hs.push_back(h);
        }
    break;
  }
  case Family::single_index:
    for (double h1 : geometric_ladder(spec.h_min, spec.h_max, axis_q)) {
      std::array<double, kMaxDim> h{1.0, 1.0, 1.0};
      h[0] = h1;
      for (int i = 1; i < d; ++i)
        h[i] = spec.h_max;
      hs.push_back(h);
    }
    break;
  case Family::besov:
    for (double v : geometric_ladder(spec.h_min, spec.h_max,
                                     std::pow(spec.sigma_ratio, -2.0 / d))) {
      std::array<double, kMaxDim> h{1.0, 1.0, 1.0};
      for (int i = 0; i < d; ++i)
        h[i] = v;
      hs.push_back(h);
    }
    break;
  case Family::aniso_holder: {
    if (!(spec.phi > 0) || !(spec.gamma > 0))
      throw std::invalid_argument("make_theta_grid: anisotropic family needs phi, gamma > 0");
    const double P = std::pow(spec.phi, 1.0 / spec.gamma); // prod h_i
    const double lo_all = spec.h_min * (1 - 1e-12), hi_all = spec.h_max * (1 + 1e-12);
    auto in_range = [&](double v) { return v >= lo_all && v <= hi_all; };
    if (d == 1) {
      if (!in_range(P))
        throw std::invalid_argument("make_theta_grid: phi^{1/gamma} outside [h_min, h_max]");
      hs.push_back({P, 1.0, 1.0});
    } else {
      double lo = std::max(spec.h_min, P / std::pow(spec.h_max, d - 1));
      double hi = std::min(spec.h_max, P / std::pow(spec.h_min, d - 1));
      if (lo > hi)
        throw std::invalid_argument("make_theta_grid: anisotropic bandwidth set is empty");
      for (double h1 : geometric_ladder(lo, hi, axis_q)) {
        if (d == 2) {
          double h2 = P / h1;
          if (in_range(h2))
            hs.push_back({h1, h2, 1.0});
          continue;
        }
        double R = P / h1;
        double lo2 = std::max(spec.h_min, R / spec.h_max);
        double hi2 = std::min(spec.h_max, R / spec.h_min);
        if (lo2 > hi2)
          continue;
        for (double h2 : geometric_ladder(lo2, hi2, axis_q)) {
          double h3 = P / (h1 * h2);
          if (in_range(h3))
            hs.push_back({h1, h2, h3});
        }
      }
      if (hs.empty())
        throw std::invalid_argument("make_theta_grid: anisotropic bandwidth set is empty");
    }
    break;
  }
  }

  std::vector<KernelParam> params;
  for (const auto& h : hs)
    for (double a : angles) {
      KernelParam mu;
      mu.family = spec.family;
      mu.dim = d;
      mu.h = h;
      mu.angle = a;
      mu.base = base;
      params.push_back(mu);
    }
  FamilySpec s = spec;
  if (s.family == Family::aniso_holder) {
    // keep phi consistent with the realized products
    for (const auto& mu : params)
      validate_param(mu, s);
  }
  return make_theta_from_params(s, std::move(params));
}

double theta_margin(const ThetaGrid& theta)
{
  double ext = 0.0;
  for (const auto& mu : theta.params()) {
    const Matrix3 E = mu.rotation();
    for (int i = 0; i < mu.dim; ++i) {
      double e = 0.0;
      for (int j = 0; j < mu.dim; ++j)
        e += std::abs(E[i][j]) * mu.h[j];
      ext = std::max(ext, e * mu.base->support_radius());
    }
  }
  return 2.0 * ext;
}

double sigma_tilde_quadrature(const KernelParam& mu, const ThetaGrid& theta,
                              const Grid& grid)
{
  double s_mu = kernel_norms_quadrature(mu, grid).l2;
  double best = s_mu;
  for (const auto& nu : theta.params())
    best = std::max(best, kernel_norms_quadrature(nu, grid).l1 * s_mu);
  return best;
}

} // namespace ptsel
