#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drbsgt {

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Block-error enumeration, embedding completeness and a short DRBSGT run
/// with the tracking and mean-dynamics monitors switched on.
std::vector<SelftestCase> run_selftest(std::uint64_t seed = 1);

}  // namespace drbsgt
