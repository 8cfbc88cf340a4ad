#include "ptsel/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ptsel {

std::size_t Stencil::offset_index(const Index& k) const
{
  std::size_t flat = 0;
  for (int i = 0; i < dim; ++i)
    flat = flat * static_cast<std::size_t>(extent(i)) +
           static_cast<std::size_t>(k[i] + radius[i]);
  return flat;
}

Index Stencil::offset(std::size_t flat) const
{
  Index k{0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    auto e = static_cast<std::size_t>(extent(i));
    k[i] = static_cast<long>(flat % e) - radius[i];
    flat /= e;
  }
  return k;
}

double Stencil::at(const Index& k) const
{
  for (int i = 0; i < dim; ++i)
    if (k[i] < -radius[i] || k[i] > radius[i])
      return 0.0;
  return w[offset_index(k)];
}

long Stencil::max_radius() const
{
  long r = 0;
  for (int i = 0; i < dim; ++i)
    r = std::max(r, radius[i]);
  return r;
}

namespace {

bool is_identity(const KernelParam& mu)
{
  return mu.dim != 2 || std::abs(std::sin(mu.angle)) < 1e-15;
}

Stencil dense_from_separable(int d, const Index& radius,
                             const std::vector<SeparableTerm>& terms)
{
  Stencil s;
  s.dim = d;
  s.radius = radius;
  std::size_t n = 1;
  for (int i = 0; i < d; ++i)
    n *= static_cast<std::size_t>(2 * radius[i] + 1);
  s.w.assign(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    Index k = s.offset(f);
    double v = 0.0;
    for (const auto& t : terms) {
      double p = t.coef;
      for (int i = 0; i < d; ++i)
        p *= t.axis[i][static_cast<std::size_t>(k[i] + radius[i])];
      v += p;
    }
    s.w[f] = v;
  }
  s.separable = terms;
  return s;
}

} // namespace

Stencil tabulate_stencil(const KernelParam& mu, double spacing)
{
  const int d = mu.dim;
  const BaseKernel& G = *mu.base;
  Matrix3 E = mu.rotation();
  Index radius{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    double ext = 0.0;
    for (int j = 0; j < d; ++j)
      ext += std::abs(E[i][j]) * mu.h[j] * G.support_radius();
    radius[i] = static_cast<long>(std::floor(ext / spacing + 1e-9));
  }

  Stencil s;
  if (is_identity(mu)) {
    std::vector<SeparableTerm> terms;
    for (std::size_t j = 0; j < G.terms().size(); ++j) {
      SeparableTerm t;
      t.coef = G.terms()[j].weight;
      for (int i = 0; i < d; ++i) {
        auto& ax = t.axis[i];
        ax.resize(static_cast<std::size_t>(2 * radius[i] + 1));
        for (long k = -radius[i]; k <= radius[i]; ++k)
          ax[static_cast<std::size_t>(k + radius[i])] =
            G.factor(j, k * spacing / mu.h[i]) * spacing / mu.h[i];
      }
      terms.push_back(std::move(t));
    }
    double total = 0.0;
    for (const auto& t : terms) {
      double p = t.coef;
      for (int i = 0; i < d; ++i) {
        double m = 0.0;
        for (double v : t.axis[i])
          m += v;
        p *= m;
      }
      total += p;
    }
    if (!(total > 1e-8))
      throw std::domain_error("tabulate_stencil: bandwidth unresolved on the grid (" +
                              mu.describe() + ")");
    for (auto& t : terms)
      t.coef /= total;
    s = dense_from_separable(d, radius, terms);
  } else {
    s.dim = d;
    s.radius = radius;
    std::size_t n = 1;
    for (int i = 0; i < d; ++i)
      n *= static_cast<std::size_t>(2 * radius[i] + 1);
    s.w.resize(n);
    double vol = std::pow(spacing, d);
    Point zero{0.0, 0.0, 0.0};
    double total = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      Index k = s.offset(f);
      Point t{k[0] * spacing, k[1] * spacing, k[2] * spacing};
      s.w[f] = eval_kernel(mu, t, zero) * vol;
      total += s.w[f];
    }
    if (!(total > 1e-8))
      throw std::domain_error("tabulate_stencil: bandwidth unresolved on the grid (" +
                              mu.describe() + ")");
    for (auto& v : s.w)
      v /= total;
  }
  return s;
}

Stencil convolve_stencils(const Stencil& a, const Stencil& b)
{
  if (a.dim != b.dim)
    throw std::invalid_argument("convolve_stencils: dimension mismatch");
  Stencil c;
  c.dim = a.dim;
  for (int i = 0; i < a.dim; ++i)
    c.radius[i] = a.radius[i] + b.radius[i];
  std::size_t n = 1;
  for (int i = 0; i < c.dim; ++i)
    n *= static_cast<std::size_t>(c.extent(i));
  c.w.assign(n, 0.0);
  for (std::size_t fa = 0; fa < a.size(); ++fa) {
    double wa = a.w[fa];
    if (wa == 0.0)
      continue;
    Index ka = a.offset(fa);
    for (std::size_t fb = 0; fb < b.size(); ++fb) {
      Index kb = b.offset(fb);
      Index m{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]};
      c.w[c.offset_index(m)] += wa * b.w[fb];
    }
  }
  return c;
}

std::vector<double> embed_stencil(const Stencil& s, const Index& radius)
{
  Stencil box;
  box.dim = s.dim;
  box.radius = radius;
  std::size_t n = 1;
  for (int i = 0; i < s.dim; ++i) {
    if (radius[i] < s.radius[i])
      throw std::invalid_argument("embed_stencil: target box too small");
    n *= static_cast<std::size_t>(2 * radius[i] + 1);
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t f = 0; f < s.size(); ++f)
    out[box.offset_index(s.offset(f))] = s.w[f];
  return out;
}

double max_abs_difference(const Stencil& a, const Stencil& b)
{
  Index r{0, 0, 0};
  for (int i = 0; i < a.dim; ++i)
    r[i] = std::max(a.radius[i], b.radius[i]);
  auto ea = embed_stencil(a, r);
  auto eb = embed_stencil(b, r);
  double m = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i)
    m = std::max(m, std::abs(ea[i] - eb[i]));
  return m;
}

double AuxKernel::operator()(const Point& t, const Point& x) const
{
  Index k{0, 0, 0};
  for (int i = 0; i < profile.dim; ++i)
    k[i] = std::lround((t[i] - x[i]) / spacing);
  return profile.at(k) / std::pow(spacing, profile.dim);
}

double required_margin(long radius, const Grid& grid)
{
  return static_cast<double>(radius) * grid.spacing();
}

AuxKernel convolve_kernels(const KernelParam& mu, const KernelParam& nu,
                           const Grid& grid)
{
  if (mu.dim != grid.dim() || nu.dim != grid.dim())
    throw std::invalid_argument("convolve_kernels: dimension mismatch with grid");
  AuxKernel aux;
  aux.mu = mu;
  aux.nu = nu;
  aux.spacing = grid.spacing();
  aux.profile = convolve_stencils(tabulate_stencil(mu, grid.spacing()),
                                  tabulate_stencil(nu, grid.spacing()));
  double need = required_margin(aux.profile.max_radius(), grid);
  if (need > grid.margin() + 1e-12) {
    std::ostringstream os;
    os << "convolve_kernels: auxiliary support overflows D; margin must be >= "
       << need << " (grid margin " << grid.margin() << ")";
    throw std::out_of_range(os.str());
  }
  return aux;
}

} // namespace ptsel
