#pragma once

#include <cstdint>
#include <random>

namespace ptsel {

/// Purpose of a random stream; part of the seed derivation key.
enum class StreamRole : std::uint64_t
{
  observation = 1,
  noise = 2,
  function = 3,
  probe = 4,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream (master, replication, role). Depends only on the key,
/// so replications can be generated in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t replication,
                                    StreamRole role)
{
  std::uint64_t s = mix64(master);
  s = mix64(s ^ (replication * 0xd1b54a32d192ed03ULL));
  return mix64(s ^ static_cast<std::uint64_t>(role));
}

using Engine = std::mt19937_64;

} // namespace ptsel
