#include "ptsel/field.hpp"
#include "ptsel/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ptsel {

static_assert(std::endian::native == std::endian::little,
              "field dump assumes a little-endian host");

TestFunction constant_function(int dim, double c)
{
  ClassParams p;
  p.cls = FunctionClass::constant;
  p.L = 0.0;
  return TestFunction(dim, [c](const Point&) { return c; }, p,
                      "const(" + std::to_string(c) + ")");
}

std::vector<double> signal_increments(const TestFunction& F, const Grid& grid)
{
  std::vector<double> s(grid.size());
  for (std::size_t f = 0; f < grid.size(); ++f) {
    double v = F(grid.point(f));
    if (!std::isfinite(v))
      throw std::domain_error("sample_field: F is not finite at grid node " +
                              std::to_string(f));
    s[f] = v * grid.cell_volume();
  }
  return s;
}

void fill_noise(std::span<double> out, double cell_volume, std::uint64_t seed)
{
  Engine eng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  double sd = std::sqrt(cell_volume);
  for (auto& v : out)
    v = sd * z(eng);
}

ObservationField sample_field(std::span<const double> signal, double eps,
                              const Grid& grid, std::uint64_t seed,
                              std::string truth_id)
{
  if (signal.size() != grid.size())
    throw std::invalid_argument("sample_field: signal size does not match grid");
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("sample_field: eps must be finite and >= 0");
  ObservationField out;
  out.grid = grid;
  out.eps = eps;
  out.seed = seed;
  out.truth_id = std::move(truth_id);
  out.increments.assign(signal.begin(), signal.end());
  if (eps > 0.0) {
    std::vector<double> z(grid.size());
    fill_noise(z, grid.cell_volume(), seed);
    for (std::size_t i = 0; i < z.size(); ++i)
      out.increments[i] += eps * z[i];
  }
  return out;
}

ObservationField sample_field(const TestFunction& F, double eps,
                              const Grid& grid, std::uint64_t seed)
{
  auto s = signal_increments(F, grid);
  return sample_field(s, eps, grid, seed, F.id());
}

NoiseField sample_noise_field(const Grid& grid, std::uint64_t seed)
{
  NoiseField out{grid, std::vector<double>(grid.size()), seed};
  fill_noise(out.increments, grid.cell_volume(), seed);
  return out;
}

namespace {

template <class T>
void put(std::ofstream& os, T v)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::ifstream& is)
{
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T)))
    throw std::runtime_error("read_field: truncated header");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

} // namespace

void write_field(const std::filesystem::path& path, const ObservationField& f)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("write_field: cannot open " + path.string());
  put<std::int64_t>(os, f.grid.dim());
  put<std::int64_t>(os, f.grid.n());
  put<double>(os, f.grid.margin());
  put<double>(os, f.eps);
  put<std::uint64_t>(os, f.seed);
  os.write(reinterpret_cast<const char*>(f.increments.data()),
           static_cast<std::streamsize>(f.increments.size() * sizeof(double)));
  if (!os)
    throw std::runtime_error("write_field: write failed for " + path.string());
}

ObservationField read_field(const std::filesystem::path& path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("read_field: cannot open " + path.string());
  auto d = get<std::int64_t>(is);
  auto n = get<std::int64_t>(is);
  auto margin = get<double>(is);
  ObservationField f;
  f.grid = make_grid(static_cast<int>(d), static_cast<long>(n), margin);
  f.eps = get<double>(is);
  f.seed = get<std::uint64_t>(is);
  f.increments.resize(f.grid.size());
  if (!is.read(reinterpret_cast<char*>(f.increments.data()),
               static_cast<std::streamsize>(f.increments.size() * sizeof(double))))
    throw std::runtime_error("read_field: truncated data in " + path.string());
  return f;
}

} // namespace ptsel
