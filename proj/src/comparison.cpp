#include "ptsel/comparison.hpp"

#include "fft.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ptsel {

struct ComparisonEngine::Spectra
{
  std::unique_ptr<detail::RealFft> fft;
  std::vector<detail::FftwBuffer<fftw_complex>> khat;
};

ComparisonEngine::ComparisonEngine(const ThetaGrid& theta, const Grid& grid)
  : theta_(theta)
  , grid_(grid)
{
  if (theta.spec().dim != grid.dim())
    throw std::invalid_argument("ComparisonEngine: dimension mismatch");
  stencils_.reserve(theta.size());
  for (const auto& mu : theta.params()) {
    stencils_.push_back(tabulate_stencil(mu, grid.spacing()));
    for (int i = 0; i < grid.dim(); ++i)
      R_[i] = std::max(R_[i], stencils_.back().radius[i]);
  }
  std::size_t W = 1;
  for (int i = 0; i < grid.dim(); ++i)
    W *= static_cast<std::size_t>(2 * R_[i] + 1);
  wmat_.resize(static_cast<Eigen::Index>(theta.size()), static_cast<Eigen::Index>(W));
  for (std::size_t m = 0; m < theta.size(); ++m) {
    auto e = embed_stencil(stencils_[m], R_);
    for (std::size_t j = 0; j < W; ++j)
      wmat_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = e[j];
  }
}

ComparisonEngine::~ComparisonEngine() = default;

double ComparisonEngine::required_margin() const
{
  long r = 0;
  for (int i = 0; i < grid_.dim(); ++i)
    r = std::max(r, 2 * R_[i]);
  return ptsel::required_margin(r, grid_);
}

const ComparisonEngine::Spectra&
ComparisonEngine::spectra_for(const std::array<int, 3>& shape) const
{
  std::lock_guard<std::mutex> lock(mtx_);
  auto it = spectra_.find(shape);
  if (it != spectra_.end())
    return *it->second;
  auto sp = std::make_unique<Spectra>();
  sp->fft = std::make_unique<detail::RealFft>(grid_.dim(), shape);
  const auto& fft = *sp->fft;
  auto buf = detail::fftw_buffer<double>(fft.real_size());
  for (const auto& w : stencils_) {
    std::fill(buf.get(), buf.get() + fft.real_size(), 0.0);
    for (std::size_t f = 0; f < w.size(); ++f) {
      Index k = w.offset(f);
      std::size_t flat = 0;
      for (int i = 0; i < grid_.dim(); ++i) {
        long m = ((k[i] % shape[i]) + shape[i]) % shape[i];
        flat = flat * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(m);
      }
      buf[flat] = w.w[f];
    }
    auto kh = detail::fftw_buffer<fftw_complex>(fft.complex_size());
    fft.forward(buf.get(), kh.get());
    sp->khat.push_back(std::move(kh));
  }
  auto& ref = *sp;
  spectra_.emplace(shape, std::move(sp));
  return ref;
}

EstimateTable ComparisonEngine::evaluate(std::span<const double> increments,
                                         const Index& node) const
{
  return evaluate(increments, std::vector<Index>{node}).front();
}

std::vector<EstimateTable>
ComparisonEngine::evaluate(std::span<const double> increments,
                           const std::vector<Index>& nodes) const
{
  const int d = grid_.dim();
  if (increments.size() != grid_.size())
    throw std::invalid_argument("ComparisonEngine: field size does not match grid");
  if (nodes.empty())
    return {};
  // Z box covers every window; the data box extends it by R
  NodeBox zbox, dbox;
  zbox.dim = dbox.dim = d;
  for (int i = 0; i < d; ++i) {
    long lo = nodes.front()[i], hi = nodes.front()[i];
    for (const auto& x : nodes) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
    zbox.lo[i] = lo - R_[i];
    zbox.hi[i] = hi + R_[i];
    dbox.lo[i] = zbox.lo[i] - R_[i];
    dbox.hi[i] = zbox.hi[i] + R_[i];
    if (dbox.lo[i] < 0 || dbox.hi[i] >= grid_.n()) {
      std::ostringstream os;
      os << "support overflow: auxiliary kernels leave the grid; margin must be >= "
         << required_margin() << " (grid margin " << grid_.margin() << ")";
      throw std::out_of_range(os.str());
    }
  }
  std::array<int, 3> shape{1, 1, 1};
  for (int i = 0; i < d; ++i)
    shape[i] = static_cast<int>(
      detail::nice_fft_size(static_cast<std::size_t>(dbox.extent(i))));
  const Spectra& sp = spectra_for(shape);
  const auto& fft = *sp.fft;

  auto pflat = [&](const Index& local) {
    std::size_t f = 0;
    for (int i = 0; i < d; ++i)
      f = f * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(local[i]);
    return f;
  };

  auto data = detail::fftw_buffer<double>(fft.real_size());
  auto dhat = detail::fftw_buffer<fftw_complex>(fft.complex_size());
  auto prod = detail::fftw_buffer<fftw_complex>(fft.complex_size());
  auto zbuf = detail::fftw_buffer<double>(fft.real_size());
  std::fill(data.get(), data.get() + fft.real_size(), 0.0);
  for (std::size_t f = 0; f < dbox.size(); ++f) {
    Index a = dbox.unflatten(f);
    Index local{a[0] - dbox.lo[0], a[1] - dbox.lo[1], a[2] - dbox.lo[2]};
    data[pflat(local)] = increments[grid_.flatten(a)];
  }
  fft.forward(data.get(), dhat.get());

  const auto T = static_cast<Eigen::Index>(theta_.size());
  const std::size_t nz = zbox.size();
  // column-major |Theta| x |zbox|: each window column is contiguous
  Eigen::MatrixXd Z(T, static_cast<Eigen::Index>(nz));
  std::vector<std::size_t> zpos(nz);
  for (std::size_t f = 0; f < nz; ++f) {
    Index a = zbox.unflatten(f);
    Index local{a[0] - dbox.lo[0], a[1] - dbox.lo[1], a[2] - dbox.lo[2]};
    zpos[f] = pflat(local);
  }
  const double scale = 1.0 / (static_cast<double>(fft.real_size()) * grid_.cell_volume());
  for (Eigen::Index m = 0; m < T; ++m) {
    const fftw_complex* kh = sp.khat[static_cast<std::size_t>(m)].get();
    for (std::size_t c = 0; c < fft.complex_size(); ++c) {
      double a = dhat[c][0], b = dhat[c][1], kr = kh[c][0], ki = kh[c][1];
      prod[c][0] = a * kr + b * ki;
      prod[c][1] = b * kr - a * ki;
    }
    fft.inverse(prod.get(), zbuf.get());
    for (std::size_t f = 0; f < nz; ++f)
      Z(m, static_cast<Eigen::Index>(f)) = zbuf[zpos[f]] * scale;
  }

  NodeBox window;
  window.dim = d;
  for (int i = 0; i < d; ++i) {
    window.lo[i] = -R_[i];
    window.hi[i] = R_[i];
  }
  const auto W = static_cast<Eigen::Index>(window.size());
  std::vector<EstimateTable> out;
  out.reserve(nodes.size());
  Eigen::MatrixXd Zw(T, W);
  for (const auto& x : nodes) {
    for (Eigen::Index j = 0; j < W; ++j) {
      Index off = window.unflatten(static_cast<std::size_t>(j));
      Index y{x[0] + off[0], x[1] + off[1], x[2] + off[2]};
      Zw.col(j) = Z.col(static_cast<Eigen::Index>(zbox.flatten(y)));
    }
    EstimateTable t;
    t.node = x;
    t.pair.noalias() = Zw * wmat_.transpose();
    t.single = Z.col(static_cast<Eigen::Index>(zbox.flatten(x)));
    out.push_back(std::move(t));
  }
  return out;
}

} // namespace ptsel
