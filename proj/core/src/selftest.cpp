#include "drbsgt/selftest.hpp"

#include "drbsgt/blocks.hpp"
#include "drbsgt/harness.hpp"
#include "drbsgt/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace drbsgt {
namespace {

constexpr double kTolerance = 1e-12;

Vector gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> gauss;
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = gauss(rng);
  return v;
}

SelftestCase block_error_enumeration(std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::kProbe);
  double worst_mean = 0.0;
  double worst_square = 0.0;
  for (std::size_t b : {1, 2, 3, 4, 6, 12}) {
    const BlockPartition partition(12, b);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector g = gaussian_vector(12, rng);
      const BlockErrorMoments moments = enumerate_block_error_moments(as_span(g), partition);
      worst_mean = std::max(worst_mean, moments.mean_error.cwiseAbs().maxCoeff());
      worst_square = std::max(
          worst_square,
          std::abs(moments.mean_squared_norm - static_cast<double>(b - 1) * g.squaredNorm()));
    }
  }
  return {"block error enumeration", worst_mean <= kTolerance && worst_square <= kTolerance,
          fmt::format("max |mean error| {:.3g}, max |mean square - (b-1)|g|^2| {:.3g}",
                      worst_mean, worst_square)};
}

SelftestCase embedding_identity(std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, 1, StreamPurpose::kProbe);
  double worst_sum = 0.0;
  double worst_norm = 0.0;
  for (std::size_t b = 1; b <= 12; ++b) {
    const BlockPartition partition(12, b);
    const Vector x = gaussian_vector(12, rng);
    Vector total = Vector::Zero(12);
    double squares = 0.0;
    for (std::size_t l = 0; l < b; ++l) {
      const BlockRange r = partition.block(l);
      const Vector piece = embed_block(
          partition, l,
          as_span(Vector(x.segment(static_cast<Eigen::Index>(r.offset),
                                   static_cast<Eigen::Index>(r.size)))));
      total += piece;
      squares += piece.squaredNorm();
    }
    worst_sum = std::max(worst_sum, (total - x).cwiseAbs().maxCoeff());
    worst_norm = std::max(worst_norm, std::abs(squares - x.squaredNorm()));
  }
  return {"block embedding identity", worst_sum <= kTolerance && worst_norm <= kTolerance,
          fmt::format("max |sum - x| {:.3g}, max |sum of squares - |x|^2| {:.3g}", worst_sum,
                      worst_norm)};
}

SelftestCase tracking_smoke(std::uint64_t seed) {
  ExperimentConfig config;
  config.algorithm = Algorithm::kDrbsgt;
  config.graph = GraphKind::kRing;
  config.m = 5;
  config.n = 20;
  config.b = 4;
  config.noise = 0.1;
  config.gamma = 12.0;
  config.Gamma = 300.0;
  config.horizon = 200;
  config.paths = 2;
  config.master_seed = seed;
  const RunResult result = run_experiment(config);
  const MonitorReport& m = result.monitors;
  return {"tracking identity smoke run",
          m.tracking_violations == 0 && m.mean_dynamics_violations == 0 &&
              m.consensus_violations == 0 && result.failures.empty(),
          fmt::format("{} steps, max tracking residual {:.3g}, max mean-dynamics gap {:.3g}, "
                      "{} consensus violations",
                      m.steps_checked, m.max_tracking_residual, m.max_mean_dynamics_gap,
                      m.consensus_violations)};
}

}  // namespace

std::vector<SelftestCase> run_selftest(std::uint64_t seed) {
  return {block_error_enumeration(seed), embedding_identity(seed), tracking_smoke(seed)};
}

}  // namespace drbsgt
