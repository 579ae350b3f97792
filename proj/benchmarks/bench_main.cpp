#include "drbsgt/algorithms.hpp"
#include "drbsgt/dataset.hpp"
#include "drbsgt/network.hpp"
#include "drbsgt/objectives.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

using namespace drbsgt;

void BM_SpectralGap(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const MixingMatrix mixing =
      build_mixing_matrix(build_graph(GraphKind::kRing, m), WeightRule::kMetropolis);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_gap(mixing.weights()));
}
BENCHMARK(BM_SpectralGap)->Arg(5)->Arg(20)->Arg(50);

std::shared_ptr<LogisticObjective> logistic(std::size_t batch) {
  SyntheticSpec spec;
  auto data = std::make_shared<const Dataset>(
      partition_dataset(generate_synthetic_dataset(spec), 5, ShardRule::kContiguous));
  return std::make_shared<LogisticObjective>(data, 0.1, batch);
}

void BM_LogisticBlockGradient(benchmark::State& state) {
  const auto objective = logistic(100);
  const BlockPartition partition(objective->dim(), static_cast<std::size_t>(state.range(0)));
  Vector x = Vector::Zero(static_cast<Eigen::Index>(objective->dim()));
  Vector out(static_cast<Eigen::Index>(partition.block(0).size));
  Rng rng(7);
  for (auto _ : state) {
    objective->stochastic_block_gradient(0, as_span(x), partition.block(0), rng, as_span(out));
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_LogisticBlockGradient)->Arg(1)->Arg(10)->Arg(100);

void BM_Step(benchmark::State& state, Algorithm algorithm) {
  const auto objective = logistic(100);
  const MixingMatrix mixing =
      build_mixing_matrix(build_graph(GraphKind::kComplete, 5), WeightRule::kMetropolis);
  const BlockPartition partition(objective->dim(), 10);
  const StepSchedule schedule(10.0, 1e4);
  PathStreams streams = PathStreams::derive(1, 0, 5);
  SwarmState swarm = init_swarm(algorithm, *objective, partition,
                                initial_points(5, objective->dim(), InitialPoint::kGaussian, 1, 0),
                                streams);
  for (auto _ : state) step(swarm, mixing, schedule, *objective, partition, streams);
}
BENCHMARK_CAPTURE(BM_Step, drbsgt, Algorithm::kDrbsgt);
BENCHMARK_CAPTURE(BM_Step, dsgt, Algorithm::kDsgt);
BENCHMARK_CAPTURE(BM_Step, atc, Algorithm::kAtc);

}  // namespace

BENCHMARK_MAIN();
