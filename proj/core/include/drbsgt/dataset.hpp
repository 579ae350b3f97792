#pragma once

#include "drbsgt/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

namespace drbsgt {

/// Labeled samples (u_j, v_j) with v_j ∈ {−1, +1}, optionally split into
/// per-agent shards S_i.
struct Dataset {
  Matrix features;                             // s × n, row j is u_j
  std::vector<double> labels;                  // ±1
  std::vector<std::vector<std::size_t>> shards;  // S_i, empty until partitioned

  std::size_t num_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t num_agents() const { return shards.size(); }
};

struct SyntheticSpec {
  std::size_t samples = 1000;
  std::size_t dim = 200;
  double mean = 5.0;
  double stddev = 0.5;
  double flip_rate = 0.05;
  std::uint64_t seed = 1;
};

/// i.i.d. Gaussian features; labels are the sign of a planted hyperplane
/// evaluated on the centered features, flipped independently at `flip_rate`.
Dataset generate_synthetic_dataset(const SyntheticSpec& spec);

enum class LabelRule {
  kSign,       // raw label already in {−1, +1}
  kParity,     // even digit → +1, odd → −1
  kOneVsRest,  // positive_class → +1, everything else → −1
};

struct LabelMapping {
  LabelRule rule = LabelRule::kParity;
  long positive_class = 0;
};

struct LoadOptions {
  LabelMapping labels;
  bool scale_unit = false;  // divide every feature by the largest |feature|
};

/// Header-free CSV rows `label,feat_1,...,feat_n`. Files ending in `.gz` are
/// decompressed on the fly.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});
Dataset parse_dataset(std::istream& in, const LoadOptions& options = {});

enum class ShardRule { kContiguous, kRoundRobin };

/// Assign every sample to exactly one of m agents.
Dataset partition_dataset(Dataset data, std::size_t num_agents, ShardRule rule);

}  // namespace drbsgt
