#include "drbsgt/blocks.hpp"
#include "drbsgt/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace drbsgt {
namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double x : values) v(j++) = x;
  return v;
}

TEST(Partition, NearEqualSizes) {
  EXPECT_EQ(make_partition(10, 4).sizes(), (std::vector<std::size_t>{3, 3, 2, 2}));
  EXPECT_EQ(make_partition(10, 4).offsets(), (std::vector<std::size_t>{0, 3, 6, 8}));
  const BlockPartition mnist = make_partition(784, 14);
  EXPECT_EQ(mnist.count(), 14u);
  for (std::size_t s : mnist.sizes()) EXPECT_EQ(s, 56u);
  EXPECT_EQ(make_partition(5, 5).sizes(), (std::vector<std::size_t>(5, 1)));
}

TEST(Partition, CoversRangeInOrder) {
  for (std::size_t n = 1; n <= 30; ++n) {
    for (std::size_t b = 1; b <= n; ++b) {
      const BlockPartition p(n, b);
      std::size_t next = 0;
      for (std::size_t l = 0; l < b; ++l) {
        EXPECT_EQ(p.block(l).offset, next);
        EXPECT_GT(p.block(l).size, 0u);
        next += p.block(l).size;
      }
      EXPECT_EQ(next, n);
    }
  }
}

TEST(Partition, InvalidCounts) {
  EXPECT_THROW(make_partition(4, 0), ArgumentError);
  EXPECT_THROW(make_partition(4, 5), ArgumentError);
}

TEST(Embed, PlacesValues) {
  const BlockPartition p(4, 2);
  const Vector v = vec({3, 4});
  EXPECT_EQ(embed_block(p, 1, as_span(v)), vec({0, 0, 3, 4}));
  const Vector wrong = vec({1, 2, 3});
  EXPECT_THROW(embed_block(p, 1, as_span(wrong)), ArgumentError);
}

TEST(Embed, NormAndCompleteness) {
  Rng rng(5);
  for (std::size_t b = 1; b <= 12; ++b) {
    const BlockPartition p(12, b);
    const Vector x = testing::gaussian(12, rng);
    Vector total = Vector::Zero(12);
    double squares = 0.0;
    for (std::size_t l = 0; l < b; ++l) {
      const BlockRange r = p.block(l);
      const Vector piece = x.segment(static_cast<Eigen::Index>(r.offset),
                                     static_cast<Eigen::Index>(r.size));
      const Vector e = embed_block(p, l, as_span(piece));
      EXPECT_NEAR(e.squaredNorm(), piece.squaredNorm(), 1e-12);
      total += e;
      squares += e.squaredNorm();
    }
    EXPECT_EQ(total, x);
    EXPECT_NEAR(squares, x.squaredNorm(), 1e-12);
  }
}

TEST(BlockError, HandExamples) {
  const Vector g = vec({1, 2, 3, 4});
  EXPECT_EQ(block_error(as_span(g), BlockPartition(4, 1), 0), Vector::Zero(4));
  EXPECT_EQ(block_error(as_span(g), BlockPartition(4, 2), 0), vec({-1, -2, 3, 4}));
  EXPECT_EQ(block_error(as_span(g), BlockPartition(4, 2), 1), vec({1, 2, -3, -4}));
}

TEST(BlockError, EnumeratedMoments) {
  const Vector g = vec({1, 2, 3, 4});
  const auto two = enumerate_block_error_moments(as_span(g), BlockPartition(4, 2));
  EXPECT_NEAR(two.mean_squared_norm, 30.0, 1e-12);
  EXPECT_LE(two.mean_error.cwiseAbs().maxCoeff(), 1e-12);
  const auto one = enumerate_block_error_moments(as_span(g), BlockPartition(4, 1));
  EXPECT_EQ(one.mean_squared_norm, 0.0);
  EXPECT_EQ(one.mean_error, Vector::Zero(4));
}

TEST(BlockError, ConstantVectorClosedForm) {
  for (std::size_t b : {1, 2, 3, 4, 6, 12}) {
    const double c = -1.75;
    const Vector g = Vector::Constant(12, c);
    const auto moments = enumerate_block_error_moments(as_span(g), BlockPartition(12, b));
    EXPECT_NEAR(moments.mean_squared_norm, static_cast<double>((b - 1) * 12) * c * c, 1e-12);
  }
}

// Brute force: average the errors over ℓ by hand, independent of the
// moment routine.
TEST(BlockError, MeanZeroAndSecondMomentForRandomGradients) {
  Rng rng(99);
  for (std::size_t b : {1, 2, 3, 4, 6, 12}) {
    const BlockPartition p(12, b);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector g = testing::gaussian(12, rng);
      Vector mean = Vector::Zero(12);
      double squares = 0.0;
      for (std::size_t l = 0; l < b; ++l) {
        Vector e = g;
        const BlockRange r = p.block(l);
        for (std::size_t c = r.offset; c < r.offset + r.size; ++c) {
          e(static_cast<Eigen::Index>(c)) -= static_cast<double>(b) * g(static_cast<Eigen::Index>(c));
        }
        mean += e;
        squares += e.squaredNorm();
      }
      mean /= static_cast<double>(b);
      squares /= static_cast<double>(b);
      EXPECT_LE(mean.cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(squares, static_cast<double>(b - 1) * g.squaredNorm(), 1e-12);
      const auto moments = enumerate_block_error_moments(as_span(g), p);
      EXPECT_NEAR(moments.mean_squared_norm, squares, 1e-12);
    }
  }
}

TEST(Selector, UniformFrequencies) {
  for (std::size_t b : {2, 5, 14}) {
    BlockSelector selector(b);
    Rng rng(1234 + b);
    std::vector<std::size_t> counts(b, 0);
    const std::size_t draws = 1'000'000;
    for (std::size_t t = 0; t < draws; ++t) ++counts[selector.draw(rng)];
    const double p = 1.0 / static_cast<double>(b);
    const double sd = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));
    for (std::size_t c : counts) {
      EXPECT_LE(std::abs(static_cast<double>(c) - static_cast<double>(draws) * p), 4.0 * sd);
    }
  }
}

}  // namespace
}  // namespace drbsgt
