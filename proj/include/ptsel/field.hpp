#pragma once

#include "ptsel/grid.hpp"
#include "ptsel/test_function.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ptsel {

/// Discretized realization of Y(dt) = F dt + eps W(dt): one increment per cell.
struct ObservationField
{
  Grid grid;
  std::vector<double> increments;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::string truth_id;
};

/// Pure white-noise increments, variance cell_volume each.
struct NoiseField
{
  Grid grid;
  std::vector<double> increments;
  std::uint64_t seed = 0;
};

/// F(t_i) * cell_volume at every node; throws on a non-finite value.
std::vector<double> signal_increments(const TestFunction& F, const Grid& grid);

ObservationField sample_field(const TestFunction& F, double eps,
                              const Grid& grid, std::uint64_t seed);

/// Same as above with the signal part precomputed by signal_increments.
ObservationField sample_field(std::span<const double> signal, double eps,
                              const Grid& grid, std::uint64_t seed,
                              std::string truth_id = {});

NoiseField sample_noise_field(const Grid& grid, std::uint64_t seed);

/// Fill out with sqrt(cell_volume) * z_i from the given seed.
void fill_noise(std::span<double> out, double cell_volume, std::uint64_t seed);

/// Binary dump: little-endian header (d, n as int64; margin, eps as float64;
/// seed as uint64), then the increments as float64 in row-major order.
void write_field(const std::filesystem::path& path, const ObservationField& f);
ObservationField read_field(const std::filesystem::path& path);

} // namespace ptsel
