#include "ptsel/base_kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace ptsel {

namespace {

constexpr double kShoulder = 0.5; // box_smooth flat part

double smoothstep(double z) { return z * z * (3.0 - 2.0 * z); }

using Gauss = boost::math::quadrature::gauss<double, 24>;

/// Integral of f over [a, b] split at the given sorted cut points.
template <class F>
double piecewise(F&& f, double a, double b, std::vector<double> cuts)
{
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = std::max(a, cuts[i]);
    double hi = std::min(b, cuts[i + 1]);
    if (hi > lo)
      total += Gauss::integrate(f, lo, hi);
  }
  return total;
}

std::vector<double> scaled_cuts(Profile p, double scale)
{
  std::vector<double> out{0.0, -scale, scale};
  for (double b : profile::breakpoints(p)) {
    out.push_back(b * scale);
    out.push_back(-b * scale);
  }
  return out;
}

} // namespace

Profile parse_profile(std::string_view name)
{
  if (name == "box-smooth" || name == "box_smooth")
    return Profile::box_smooth;
  if (name == "quartic")
    return Profile::quartic;
  if (name == "triweight")
    return Profile::triweight;
  throw std::invalid_argument("unknown kernel profile '" + std::string(name) + "'");
}

std::string_view to_string(Profile p)
{
  switch (p) {
  case Profile::box_smooth:
    return "box-smooth";
  case Profile::quartic:
    return "quartic";
  case Profile::triweight:
    return "triweight";
  }
  return "?";
}

namespace profile {

double value(Profile p, double u)
{
  double a = std::abs(u);
  if (a >= 1.0)
    return 0.0;
  double q = 1.0 - a * a;
  switch (p) {
  case Profile::box_smooth:
    return a <= kShoulder ? 2.0 / 3.0
                          : 2.0 / 3.0 * smoothstep((1.0 - a) / (1.0 - kShoulder));
  case Profile::quartic:
    return 15.0 / 16.0 * q * q;
  case Profile::triweight:
    return 35.0 / 32.0 * q * q * q;
  }
  return 0.0;
}

double derivative(Profile p, double u)
{
  double a = std::abs(u);
  if (a >= 1.0)
    return 0.0;
  double sgn = u < 0 ? -1.0 : 1.0;
  double q = 1.0 - a * a;
  switch (p) {
  case Profile::box_smooth: {
    if (a <= kShoulder)
      return 0.0;
    double z = (1.0 - a) / (1.0 - kShoulder);
    return -sgn * 2.0 / 3.0 * 6.0 * z * (1.0 - z) / (1.0 - kShoulder);
  }
  case Profile::quartic:
    return -15.0 / 4.0 * u * q;
  case Profile::triweight:
    return -105.0 / 16.0 * u * q * q;
  }
  return 0.0;
}

double max_value(Profile p)
{
  switch (p) {
  case Profile::box_smooth:
    return 2.0 / 3.0;
  case Profile::quartic:
    return 15.0 / 16.0;
  case Profile::triweight:
    return 35.0 / 32.0;
  }
  return 0.0;
}

double max_derivative(Profile p)
{
  switch (p) {
  case Profile::box_smooth:
    return 2.0;
  case Profile::quartic: {
    double u = 1.0 / std::sqrt(3.0);
    return 15.0 / 4.0 * u * (1.0 - u * u);
  }
  case Profile::triweight: {
    double u = 1.0 / std::sqrt(5.0);
    double q = 1.0 - u * u;
    return 105.0 / 16.0 * u * q * q;
  }
  }
  return 0.0;
}

std::vector<double> breakpoints(Profile p)
{
  if (p == Profile::box_smooth)
    return {kShoulder};
  return {};
}

} // namespace profile

double factor_product_integral(Profile p, double sa, double sb)
{
  auto f = [&](double u) {
    return profile::value(p, u / sa) / sa * profile::value(p, u / sb) / sb;
  };
  auto cuts = scaled_cuts(p, sa);
  auto cb = scaled_cuts(p, sb);
  cuts.insert(cuts.end(), cb.begin(), cb.end());
  double r = std::min(sa, sb);
  return piecewise(f, -r, r, cuts);
}

double BaseKernel::factor(std::size_t j, double u) const
{
  double s = terms_[j].scale;
  return profile::value(profile_, u / s) / s;
}

double BaseKernel::factor_derivative(std::size_t j, double u) const
{
  double s = terms_[j].scale;
  return profile::derivative(profile_, u / s) / (s * s);
}

double BaseKernel::operator()(const Point& t) const
{
  double g = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    double v = terms_[j].weight;
    for (int i = 0; i < d_ && v != 0.0; ++i)
      v *= factor(j, t[i]);
    g += v;
  }
  return g;
}

Point BaseKernel::gradient(const Point& t) const
{
  Point grad{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    for (int i = 0; i < d_; ++i) {
      double v = terms_[j].weight * factor_derivative(j, t[i]);
      for (int k = 0; k < d_; ++k)
        if (k != i)
          v *= factor(j, t[k]);
      grad[i] += v;
    }
  }
  return grad;
}

std::vector<double> BaseKernel::g_coefficients() const
{
  std::vector<double> c;
  double s0 = terms_.front().scale;
  for (const auto& t : terms_)
    c.push_back(t.weight * std::pow(s0 / t.scale, d_));
  return c;
}

double BaseKernel::moment(const std::array<int, kMaxDim>& r) const
{
  double total = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    double s = terms_[j].scale;
    double v = terms_[j].weight;
    for (int i = 0; i < d_; ++i) {
      int ri = r[i];
      auto f = [&](double u) { return std::pow(u, ri) * factor(j, u); };
      v *= piecewise(f, -s, s, scaled_cuts(profile_, s));
    }
    total += v;
  }
  return total;
}

std::string BaseKernel::id() const
{
  std::ostringstream os;
  os << to_string(profile_) << "/d" << d_ << "/l" << order_;
  if (custom_)
    os << "/custom";
  return os.str();
}

namespace {

double l2_norm(const BaseKernel& G)
{
  const auto& T = G.terms();
  double s = 0.0;
  for (const auto& a : T)
    for (const auto& b : T)
      s += a.weight * b.weight *
           std::pow(factor_product_integral(G.profile(), a.scale, b.scale), G.dim());
  return std::sqrt(s);
}

double l1_norm(const BaseKernel& G)
{
  bool nonneg = std::all_of(G.terms().begin(), G.terms().end(),
                            [](const KernelTerm& t) { return t.weight >= 0; });
  if (nonneg) {
    double m = 0.0;
    for (const auto& t : G.terms())
      m += t.weight;
    return m;
  }
  std::vector<double> cuts;
  for (const auto& t : G.terms()) {
    auto c = scaled_cuts(G.profile(), t.scale);
    for (double v : c)
      if (v > 0)
        cuts.push_back(v);
  }
  cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double R = G.support_radius();
  int d = G.dim();
  if (d == 1) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i] >= R)
        break;
      auto f = [&](double u) { return std::abs(G(Point{u, 0.0, 0.0})); };
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, cuts[i], std::min(cuts[i + 1], R), 20, 1e-13);
    }
    return 2.0 * total;
  }
  // tensor composite rule on [0, R]^d; G is even in every coordinate
  std::vector<double> nodes, weights;
  const int target = d == 2 ? 800 : 120; // nodes per axis
  const int panels = std::max(1, target / (8 * static_cast<int>(cuts.size())));
  const auto& gx = boost::math::quadrature::gauss<double, 8>::abscissa();
  const auto& gw = boost::math::quadrature::gauss<double, 8>::weights();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double lo = cuts[i], hi = std::min(cuts[i + 1], R);
    if (hi <= lo)
      continue;
    double w = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      double c = lo + (p + 0.5) * w;
      for (std::size_t k = 0; k < gx.size(); ++k) {
        double off = gx[k] * w / 2;
        double wk = gw[k] * w / 2;
        nodes.push_back(c + off);
        weights.push_back(wk);
        if (gx[k] != 0.0) {
          nodes.push_back(c - off);
          weights.push_back(wk);
        }
      }
    }
  }
  std::size_t m = nodes.size();
  double total = 0.0;
  if (d == 2) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        total += weights[a] * weights[b] * std::abs(G(Point{nodes[a], nodes[b], 0.0}));
  } else {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t c = 0; c < m; ++c)
          total += weights[a] * weights[b] * weights[c] *
                   std::abs(G(Point{nodes[a], nodes[b], nodes[c]}));
  }
  return std::pow(2.0, d) * total;
}

double grad_bound(const BaseKernel& G)
{
  double kmax = profile::max_value(G.profile());
  double kpmax = profile::max_derivative(G.profile());
  int d = G.dim();
  double M = 0.0;
  for (const auto& t : G.terms())
    M += std::abs(t.weight) * std::sqrt(double(d)) * kpmax / (t.scale * t.scale) *
         std::pow(kmax / t.scale, d - 1);
  return M;
}

void for_each_multi_index(int d, int max_total,
                          const std::function<void(const std::array<int, kMaxDim>&)>& f)
{
  std::array<int, kMaxDim> r{0, 0, 0};
  for (r[0] = 0; r[0] <= max_total; ++r[0])
    for (r[1] = 0; r[1] <= (d > 1 ? max_total - r[0] : 0); ++r[1])
      for (r[2] = 0; r[2] <= (d > 2 ? max_total - r[0] - r[1] : 0); ++r[2])
        f(r);
}

} // namespace

MomentReport validate_moments(const BaseKernel& G, int order, double mass_tol,
                              double moment_tol)
{
  MomentReport rep;
  for_each_multi_index(G.dim(), order, [&](const std::array<int, kMaxDim>& r) {
    int total = r[0] + r[1] + r[2];
    double m = G.moment(r);
    if (total == 0) {
      rep.mass_error = std::abs(m - 1.0);
      if (rep.mass_error > mass_tol)
        rep.violations.push_back({r, m});
    } else {
      rep.max_moment = std::max(rep.max_moment, std::abs(m));
      if (std::abs(m) > moment_tol)
        rep.violations.push_back({r, m});
    }
  });
  return rep;
}

BaseKernelPtr make_base_kernel_from_terms(Profile g, int d, int order,
                                          std::vector<KernelTerm> terms)
{
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("base kernel: dimension must be 1..3");
  if (order < 0)
    throw std::invalid_argument("base kernel: order must be >= 0");
  if (terms.empty())
    throw std::invalid_argument("base kernel: empty term list");
  std::shared_ptr<BaseKernel> G(new BaseKernel());
  G->d_ = d;
  G->order_ = order;
  G->profile_ = g;
  G->terms_ = std::move(terms);
  G->support_radius_ = 0.0;
  for (const auto& t : G->terms_) {
    if (!(t.scale > 0.0))
      throw std::invalid_argument("base kernel: term scale must be positive");
    G->support_radius_ = std::max(G->support_radius_, t.scale);
  }
  if (G->support_radius_ > 0.5 + 1e-15)
    throw std::invalid_argument("base kernel: support radius exceeds 1/2");
  auto rep = validate_moments(*G, order);
  if (!rep.ok()) {
    const auto& v = rep.violations.front();
    std::ostringstream os;
    os << "base kernel: moment check failed at multi-index (" << v.multi_index[0];
    for (int i = 1; i < d; ++i)
      os << "," << v.multi_index[i];
    os << "), value " << v.value;
    throw std::domain_error(os.str());
  }
  G->norm_l2_ = l2_norm(*G);
  G->norm_l1_ = l1_norm(*G);
  G->grad_bound_ = grad_bound(*G);
  return G;
}

BaseKernelPtr make_base_kernel(Profile g, int d, int order)
{
  static std::mutex mtx;
  static std::map<std::tuple<int, int, int>, BaseKernelPtr> cache;
  auto key = std::make_tuple(static_cast<int>(g), d, order);
  {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end())
      return it->second;
  }
  if (order < 0)
    throw std::invalid_argument("base kernel: order must be >= 0");
  int J = order + 1;
  std::vector<KernelTerm> terms;
  for (int j = 1; j <= J; ++j) {
    double sign = (j % 2 == 1) ? 1.0 : -1.0;
    terms.push_back({sign * boost::math::binomial_coefficient<double>(J, j),
                     static_cast<double>(j) / (2.0 * J)});
  }
  auto G = make_base_kernel_from_terms(g, d, order, std::move(terms));
  std::lock_guard<std::mutex> lock(mtx);
  cache.emplace(key, G);
  return G;
}

} // namespace ptsel
