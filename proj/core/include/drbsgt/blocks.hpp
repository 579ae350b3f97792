#pragma once

#include "drbsgt/linalg.hpp"
#include "drbsgt/random.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace drbsgt {

/// Half-open coordinate range [offset, offset + size).
struct BlockRange {
  std::size_t offset = 0;
  std::size_t size = 0;

  bool operator==(const BlockRange&) const = default;
};

/// Contiguous near-equal split of [0, n) into b blocks: the first n mod b
/// blocks have ⌈n/b⌉ coordinates, the rest ⌊n/b⌋.
class BlockPartition {
 public:
  BlockPartition(std::size_t dim, std::size_t num_blocks);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return sizes_.size(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  BlockRange block(std::size_t index) const;
  BlockRange full() const { return {0, dim_}; }

 private:
  std::size_t dim_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

inline BlockPartition make_partition(std::size_t dim, std::size_t num_blocks) {
  return BlockPartition(dim, num_blocks);
}

/// U_ℓ v: `values` on block ℓ, zero elsewhere.
Vector embed_block(const BlockPartition& partition, std::size_t index,
                   std::span<const double> values);

/// e = g − b·U_ℓ g^(ℓ).
Vector block_error(std::span<const double> full_grad,
                   const BlockPartition& partition, std::size_t index);

struct BlockErrorMoments {
  Vector mean_error;
  double mean_squared_norm = 0.0;
};

/// Exact average of e(ℓ) and ‖e(ℓ)‖² over all b equally likely blocks.
BlockErrorMoments enumerate_block_error_moments(std::span<const double> full_grad,
                                                const BlockPartition& partition);

/// Uniform draw of a block index in [0, b).
class BlockSelector {
 public:
  explicit BlockSelector(std::size_t num_blocks);

  std::size_t num_blocks() const { return num_blocks_; }
  std::size_t draw(Rng& rng) const;

 private:
  std::size_t num_blocks_;
};

}  // namespace drbsgt
