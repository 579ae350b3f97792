#pragma once

#include <cstdint>
#include <random>

namespace drbsgt {

using Rng = std::mt19937_64;

/// What a stream is used for. Distinct purposes never share a stream, which
/// keeps block selection independent of data sampling.
enum class StreamPurpose : std::uint64_t {
  kInitialPoint = 1,
  kSample = 2,
  kBlock = 3,
  kDataset = 4,
  kProblem = 5,
  kProbe = 6,
};

/// Stream key (master seed, sample path, agent, purpose) → 64-bit seed.
/// SplitMix64 finalizers are chained over the fields.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path,
                          std::uint64_t agent, StreamPurpose purpose);

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t path,
                       std::uint64_t agent, StreamPurpose purpose) {
  return Rng(derive_seed(master_seed, path, agent, purpose));
}

}  // namespace drbsgt
