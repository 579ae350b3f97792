#include "drbsgt/blocks.hpp"

#include "drbsgt/error.hpp"

#include <string>

namespace drbsgt {

BlockPartition::BlockPartition(std::size_t dim, std::size_t num_blocks)
    : dim_(dim) {
  if (num_blocks < 1 || num_blocks > dim) {
    throw ArgumentError("block count must lie in [1, n]; got b=" +
                        std::to_string(num_blocks) + ", n=" + std::to_string(dim));
  }
  const std::size_t base = dim / num_blocks;
  const std::size_t larger = dim % num_blocks;
  sizes_.reserve(num_blocks);
  offsets_.reserve(num_blocks);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < num_blocks; ++l) {
    const std::size_t size = base + (l < larger ? 1 : 0);
    offsets_.push_back(offset);
    sizes_.push_back(size);
    offset += size;
  }
}

BlockRange BlockPartition::block(std::size_t index) const {
  if (index >= sizes_.size()) {
    throw ArgumentError("block index " + std::to_string(index) + " out of range [0," +
                        std::to_string(sizes_.size()) + ")");
  }
  return {offsets_[index], sizes_[index]};
}

Vector embed_block(const BlockPartition& partition, std::size_t index,
                   std::span<const double> values) {
  const BlockRange range = partition.block(index);
  if (values.size() != range.size) {
    throw ArgumentError("block " + std::to_string(index) + " has " +
                        std::to_string(range.size) + " coordinates, got " +
                        std::to_string(values.size()));
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(partition.dim()));
  out.segment(static_cast<Eigen::Index>(range.offset), static_cast<Eigen::Index>(range.size)) =
      as_vector(values);
  return out;
}

Vector block_error(std::span<const double> full_grad,
                   const BlockPartition& partition, std::size_t index) {
  if (full_grad.size() != partition.dim()) {
    throw ArgumentError("gradient length does not match the partition dimension");
  }
  const BlockRange range = partition.block(index);
  Vector e = as_vector(full_grad);
  const double b = static_cast<double>(partition.count());
  auto seg = e.segment(static_cast<Eigen::Index>(range.offset),
                       static_cast<Eigen::Index>(range.size));
  seg -= b * seg.eval();
  return e;
}

BlockErrorMoments enumerate_block_error_moments(std::span<const double> full_grad,
                                                const BlockPartition& partition) {
  const std::size_t b = partition.count();
  BlockErrorMoments moments;
  moments.mean_error = Vector::Zero(static_cast<Eigen::Index>(partition.dim()));
  for (std::size_t l = 0; l < b; ++l) {
    const Vector e = block_error(full_grad, partition, l);
    moments.mean_error += e;
    moments.mean_squared_norm += e.squaredNorm();
  }
  moments.mean_error /= static_cast<double>(b);
  moments.mean_squared_norm /= static_cast<double>(b);
  return moments;
}

BlockSelector::BlockSelector(std::size_t num_blocks) : num_blocks_(num_blocks) {
  if (num_blocks < 1) throw ArgumentError("block selector needs at least one block");
}

std::size_t BlockSelector::draw(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, num_blocks_ - 1);
  return pick(rng);
}

}  // namespace drbsgt
