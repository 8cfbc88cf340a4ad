#include "ptsel/linear_est.hpp"

#include "fft.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ptsel {

std::size_t NodeBox::size() const
{
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i)
    n *= static_cast<std::size_t>(std::max(0L, extent(i)));
  return n;
}

bool NodeBox::contains(const Index& k) const
{
  for (int i = 0; i < dim; ++i)
    if (k[i] < lo[i] || k[i] > hi[i])
      return false;
  return true;
}

std::size_t NodeBox::flatten(const Index& k) const
{
  std::size_t flat = 0;
  for (int i = 0; i < dim; ++i)
    flat = flat * static_cast<std::size_t>(extent(i)) +
           static_cast<std::size_t>(k[i] - lo[i]);
  return flat;
}

Index NodeBox::unflatten(std::size_t flat) const
{
  Index k{0, 0, 0};
  for (int i = dim - 1; i >= 0; --i) {
    auto e = static_cast<std::size_t>(extent(i));
    k[i] = lo[i] + static_cast<long>(flat % e);
    flat /= e;
  }
  return k;
}

double EstimateField::at(const Index& node) const
{
  if (!region.contains(node))
    throw std::out_of_range("EstimateField: node outside D1");
  return values[region.flatten(node)];
}

Index snap_to_node(const Grid& grid, const Point& x)
{
  for (int i = 0; i < grid.dim(); ++i)
    if (!(std::abs(x[i]) <= 0.5 + 1e-12))
      throw std::invalid_argument("query point outside D0");
  return grid.nearest_node(x);
}

namespace {

[[noreturn]] void overflow(const Grid& grid, const Stencil& w, const Index& node)
{
  std::ostringstream os;
  os << "support overflow: stencil radius " << w.max_radius() << " at node (";
  for (int i = 0; i < grid.dim(); ++i)
    os << (i ? "," : "") << node[i];
  os << ") leaves the grid; margin must be >= "
     << required_margin(w.max_radius(), grid);
  throw std::out_of_range(os.str());
}

void check_fits(const Grid& grid, const Stencil& w, const Index& node)
{
  for (int i = 0; i < grid.dim(); ++i)
    if (node[i] - w.radius[i] < 0 || node[i] + w.radius[i] >= grid.n())
      overflow(grid, w, node);
}

/// out[idx] = sum_k ker[k + r] in[idx + k e_axis] where defined, else 0.
std::vector<double> correlate_axis(const std::vector<double>& in, const Grid& grid,
                                   int axis, const std::vector<double>& ker)
{
  long r = static_cast<long>(ker.size() / 2);
  long n = grid.n();
  std::size_t stride = 1;
  for (int i = grid.dim() - 1; i > axis; --i)
    stride *= static_cast<std::size_t>(n);
  std::vector<double> out(in.size(), 0.0);
  std::size_t outer = in.size() / (stride * static_cast<std::size_t>(n));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < stride; ++s) {
      std::size_t base = o * stride * static_cast<std::size_t>(n) + s;
      for (long i = r; i < n - r; ++i) {
        double acc = 0.0;
        const double* src = &in[base + static_cast<std::size_t>(i - r) * stride];
        for (std::size_t k = 0; k < ker.size(); ++k)
          acc += ker[k] * src[k * stride];
        out[base + static_cast<std::size_t>(i) * stride] = acc;
      }
    }
  return out;
}

} // namespace

double apply_stencil(std::span<const double> increments, const Grid& grid,
                     const Stencil& w, const Index& node)
{
  check_fits(grid, w, node);
  double acc = 0.0;
  for (std::size_t f = 0; f < w.size(); ++f) {
    Index k = w.offset(f);
    Index t{node[0] + k[0], node[1] + k[1], node[2] + k[2]};
    acc += w.w[f] * increments[grid.flatten(t)];
  }
  // increments carry the cell volume; w[k] / cell_volume is K at the node
  return acc / grid.cell_volume();
}

double estimate(const ObservationField& field, const KernelParam& mu, const Point& x)
{
  Index node = snap_to_node(field.grid, x);
  return apply_stencil(field.increments, field.grid,
                       tabulate_stencil(mu, field.grid.spacing()), node);
}

EstimateField estimate_field(const ObservationField& field, const KernelParam& mu)
{
  const Grid& grid = field.grid;
  EstimateField out;
  out.mu = mu;
  out.grid = grid;
  out.stencil = tabulate_stencil(mu, grid.spacing());
  const Stencil& w = out.stencil;
  out.region.dim = grid.dim();
  for (int i = 0; i < grid.dim(); ++i) {
    out.region.lo[i] = w.radius[i];
    out.region.hi[i] = grid.n() - 1 - w.radius[i];
    if (out.region.lo[i] > out.region.hi[i])
      overflow(grid, w, Index{0, 0, 0});
  }
  out.values.assign(out.region.size(), 0.0);

  if (!w.separable.empty()) {
    for (const auto& term : w.separable) {
      std::vector<double> cur = field.increments;
      for (int i = 0; i < grid.dim(); ++i)
        cur = correlate_axis(cur, grid, i, term.axis[i]);
      for (std::size_t f = 0; f < out.values.size(); ++f)
        out.values[f] += term.coef * cur[grid.flatten(out.region.unflatten(f))] /
                         grid.cell_volume();
    }
    return out;
  }

  // circular correlation of size >= n never wraps for nodes of D1
  std::array<int, 3> shape{1, 1, 1};
  for (int i = 0; i < grid.dim(); ++i)
    shape[i] = static_cast<int>(detail::nice_fft_size(static_cast<std::size_t>(grid.n())));
  detail::RealFft fft(grid.dim(), shape);
  auto data = detail::fftw_buffer<double>(fft.real_size());
  auto ker = detail::fftw_buffer<double>(fft.real_size());
  auto dhat = detail::fftw_buffer<fftw_complex>(fft.complex_size());
  auto khat = detail::fftw_buffer<fftw_complex>(fft.complex_size());
  std::fill(data.get(), data.get() + fft.real_size(), 0.0);
  std::fill(ker.get(), ker.get() + fft.real_size(), 0.0);
  auto pflat = [&](const Index& k) {
    std::size_t f = 0;
    for (int i = 0; i < grid.dim(); ++i) {
      long m = ((k[i] % shape[i]) + shape[i]) % shape[i];
      f = f * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(m);
    }
    return f;
  };
  for (std::size_t f = 0; f < grid.size(); ++f)
    data[pflat(grid.unflatten(f))] = field.increments[f];
  for (std::size_t f = 0; f < w.size(); ++f)
    ker[pflat(w.offset(f))] = w.w[f];
  fft.forward(data.get(), dhat.get());
  fft.forward(ker.get(), khat.get());
  for (std::size_t c = 0; c < fft.complex_size(); ++c) {
    // D * conj(K)
    double a = dhat[c][0], b = dhat[c][1], kr = khat[c][0], ki = khat[c][1];
    dhat[c][0] = a * kr + b * ki;
    dhat[c][1] = b * kr - a * ki;
  }
  fft.inverse(dhat.get(), data.get());
  double scale = 1.0 / (static_cast<double>(fft.real_size()) * grid.cell_volume());
  for (std::size_t f = 0; f < out.values.size(); ++f)
    out.values[f] = data[pflat(out.region.unflatten(f))] * scale;
  return out;
}

double estimate_aux(const EstimateField& mu_field, const Stencil& nu, const Point& x)
{
  Index node = snap_to_node(mu_field.grid, x);
  double acc = 0.0;
  for (std::size_t f = 0; f < nu.size(); ++f) {
    Index k = nu.offset(f);
    Index y{node[0] + k[0], node[1] + k[1], node[2] + k[2]};
    if (!mu_field.region.contains(y)) {
      Stencil both = convolve_stencils(mu_field.stencil, nu);
      overflow(mu_field.grid, both, node);
    }
    acc += nu.w[f] * mu_field.at(y);
  }
  return acc;
}

double estimate_aux(const ObservationField& field, const KernelParam& mu,
                    const KernelParam& nu, const Point& x)
{
  const Grid& grid = field.grid;
  Index node = snap_to_node(grid, x);
  Stencil wmu = tabulate_stencil(mu, grid.spacing());
  Stencil wnu = tabulate_stencil(nu, grid.spacing());
  Stencil both;
  both.dim = grid.dim();
  for (int i = 0; i < grid.dim(); ++i)
    both.radius[i] = wmu.radius[i] + wnu.radius[i];
  check_fits(grid, both, node);
  double acc = 0.0;
  for (std::size_t f = 0; f < wnu.size(); ++f) {
    Index k = wnu.offset(f);
    Index y{node[0] + k[0], node[1] + k[1], node[2] + k[2]};
    acc += wnu.w[f] * apply_stencil(field.increments, grid, wmu, y);
  }
  return acc;
}

double estimate_aux_direct(const ObservationField& field, const AuxKernel& aux,
                           const Point& x)
{
  Index node = snap_to_node(field.grid, x);
  return apply_stencil(field.increments, field.grid, aux.profile, node);
}

} // namespace ptsel
