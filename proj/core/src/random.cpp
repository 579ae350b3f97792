#include "drbsgt/random.hpp"

namespace drbsgt {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path,
                          std::uint64_t agent, StreamPurpose purpose) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ splitmix64(path + 0x1000));
  h = splitmix64(h ^ splitmix64(agent + 0x2000000));
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

}  // namespace drbsgt
