#include "drbsgt/algorithms.hpp"

#include "drbsgt/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace drbsgt {
namespace {

auto segment(Matrix& m, std::size_t row, BlockRange range) {
  return m.row(static_cast<Eigen::Index>(row))
      .segment(static_cast<Eigen::Index>(range.offset), static_cast<Eigen::Index>(range.size));
}

void check_shapes(const SwarmState& state, const MixingMatrix& mixing,
                  const Objective& objective) {
  if (static_cast<std::size_t>(state.x.rows()) != mixing.size() ||
      static_cast<std::size_t>(state.x.rows()) != objective.num_agents() ||
      static_cast<std::size_t>(state.x.cols()) != objective.dim()) {
    throw ArgumentError("swarm state, mixing matrix and objective disagree on (m, n)");
  }
}

// Rejects a candidate iterate that is non-finite or past the divergence
// guard; the caller's state is left untouched.
void guard(const Matrix& x, const Matrix& y, std::size_t iteration) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (!std::isfinite(norm) || norm > kDivergenceBound || !y.row(i).allFinite()) {
      throw DivergenceError(
          fmt::format("agent {} diverged at iteration {} (|x_i| = {:.3e})", i, iteration, norm),
          iteration, static_cast<std::size_t>(i));
    }
  }
}

// x_{k+1} = W (x_k − γ_k d_k)
Matrix combine(const Matrix& x, const Matrix& direction, double step,
               const MixingMatrix& mixing) {
  const Matrix adapted = x - step * direction;
  Matrix next;
  mixing.mix(adapted, next);
  return next;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDrbsgt:
      return "drbsgt";
    case Algorithm::kDsgt:
      return "dsgt";
    case Algorithm::kAtc:
      return "atc";
  }
  return "unknown";
}

PathStreams PathStreams::derive(std::uint64_t master_seed, std::uint64_t path,
                                std::size_t num_agents) {
  PathStreams streams;
  streams.sample.reserve(num_agents);
  streams.block.reserve(num_agents);
  for (std::size_t i = 0; i < num_agents; ++i) {
    streams.sample.push_back(make_stream(master_seed, path, i, StreamPurpose::kSample));
    streams.block.push_back(make_stream(master_seed, path, i, StreamPurpose::kBlock));
  }
  return streams;
}

Matrix initial_points(std::size_t num_agents, std::size_t dim, InitialPoint rule,
                      std::uint64_t master_seed, std::uint64_t path) {
  Matrix x0 = Matrix::Zero(static_cast<Eigen::Index>(num_agents), static_cast<Eigen::Index>(dim));
  if (rule == InitialPoint::kGaussian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < num_agents; ++i) {
      Rng rng = make_stream(master_seed, path, i, StreamPurpose::kInitialPoint);
      for (std::size_t c = 0; c < dim; ++c) {
        x0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = gauss(rng);
      }
    }
  }
  return x0;
}

SwarmState init_swarm(Algorithm algorithm, const Objective& objective,
                      const BlockPartition& partition, Matrix x0, PathStreams& streams) {
  const std::size_t m = objective.num_agents();
  if (partition.dim() != objective.dim() || static_cast<std::size_t>(x0.rows()) != m ||
      static_cast<std::size_t>(x0.cols()) != objective.dim()) {
    throw ArgumentError("initial point, partition and objective dimensions differ");
  }
  if (algorithm != Algorithm::kAtc && (streams.sample.size() != m || streams.block.size() != m)) {
    throw ArgumentError("one sample and one block stream per agent are required");
  }
  SwarmState state;
  state.algorithm = algorithm;
  state.x = std::move(x0);
  state.y = Matrix::Zero(state.x.rows(), state.x.cols());
  state.num_blocks = partition.count();
  if (algorithm == Algorithm::kAtc) return state;

  const BlockSelector selector(partition.count());
  state.last_block.assign(m, 0);
  state.cached_range.assign(m, {});
  state.cache.assign(m, Vector());
  for (std::size_t i = 0; i < m; ++i) {
    BlockRange range = partition.full();
    if (algorithm == Algorithm::kDrbsgt) {
      state.last_block[i] = selector.draw(streams.block[i]);
      range = partition.block(state.last_block[i]);
    }
    Vector grad(static_cast<Eigen::Index>(range.size));
    objective.stochastic_block_gradient(i, row_span(state.x, static_cast<Eigen::Index>(i)),
                                        range, streams.sample[i], as_span(grad));
    segment(state.y, i, range) = grad.transpose();
    state.cached_range[i] = range;
    state.cache[i] = std::move(grad);
    state.block_evals += algorithm == Algorithm::kDrbsgt ? 1 : partition.count();
  }
  guard(state.x, state.y, 0);
  return state;
}

void drbsgt_step(SwarmState& state, const MixingMatrix& mixing, const StepSchedule& schedule,
                 const Objective& objective, const BlockPartition& partition,
                 PathStreams& streams) {
  check_shapes(state, mixing, objective);
  const std::size_t m = objective.num_agents();
  const BlockSelector selector(partition.count());

  Matrix x_next = combine(state.x, state.y, schedule.at(state.iter), mixing);
  Matrix y_next;
  mixing.mix(state.y, y_next);

  std::vector<std::size_t> blocks(m);
  std::vector<Vector> grads(m);
  for (std::size_t i = 0; i < m; ++i) {
    blocks[i] = selector.draw(streams.block[i]);
    const BlockRange range = partition.block(blocks[i]);
    grads[i].resize(static_cast<Eigen::Index>(range.size));
    objective.stochastic_block_gradient(i, row_span(x_next, static_cast<Eigen::Index>(i)),
                                        range, streams.sample[i], as_span(grads[i]));
    // Both cases of a shared block reduce to "add new, subtract old".
    segment(y_next, i, range) += grads[i].transpose();
    segment(y_next, i, state.cached_range[i]) -= state.cache[i].transpose();
  }
  guard(x_next, y_next, state.iter + 1);

  state.x = std::move(x_next);
  state.y = std::move(y_next);
  for (std::size_t i = 0; i < m; ++i) {
    state.last_block[i] = blocks[i];
    state.cached_range[i] = partition.block(blocks[i]);
    state.cache[i] = std::move(grads[i]);
  }
  state.block_evals += m;
  ++state.iter;
}

void dsgt_step(SwarmState& state, const MixingMatrix& mixing, const StepSchedule& schedule,
               const Objective& objective, PathStreams& streams) {
  check_shapes(state, mixing, objective);
  const std::size_t m = objective.num_agents();
  const BlockRange full{0, objective.dim()};

  Matrix x_next = combine(state.x, state.y, schedule.at(state.iter), mixing);
  Matrix y_next;
  mixing.mix(state.y, y_next);

  std::vector<Vector> grads(m);
  for (std::size_t i = 0; i < m; ++i) {
    grads[i].resize(static_cast<Eigen::Index>(full.size));
    objective.stochastic_block_gradient(i, row_span(x_next, static_cast<Eigen::Index>(i)),
                                        full, streams.sample[i], as_span(grads[i]));
    segment(y_next, i, full) += grads[i].transpose();
    segment(y_next, i, state.cached_range[i]) -= state.cache[i].transpose();
  }
  guard(x_next, y_next, state.iter + 1);

  state.x = std::move(x_next);
  state.y = std::move(y_next);
  for (std::size_t i = 0; i < m; ++i) {
    state.cached_range[i] = full;
    state.cache[i] = std::move(grads[i]);
  }
  state.block_evals += m * state.num_blocks;
  ++state.iter;
}

void atc_cyclic_step(SwarmState& state, const MixingMatrix& mixing,
                     const StepSchedule& schedule, const Objective& objective,
                     const BlockPartition& partition) {
  check_shapes(state, mixing, objective);
  const std::size_t m = objective.num_agents();
  const std::size_t active = state.iter % partition.count();
  const BlockRange range = partition.block(active);

  Matrix direction = Matrix::Zero(state.x.rows(), state.x.cols());
  Vector grad(static_cast<Eigen::Index>(range.size));
  for (std::size_t i = 0; i < m; ++i) {
    objective.block_gradient(i, row_span(state.x, static_cast<Eigen::Index>(i)), range,
                             as_span(grad));
    segment(direction, i, range) = grad.transpose();
  }
  Matrix x_next = combine(state.x, direction, schedule.at(state.iter), mixing);
  guard(x_next, direction, state.iter + 1);

  state.x = std::move(x_next);
  state.y = std::move(direction);
  state.last_block.assign(m, active);
  state.block_evals += m;
  ++state.iter;
}

void step(SwarmState& state, const MixingMatrix& mixing, const StepSchedule& schedule,
          const Objective& objective, const BlockPartition& partition,
          PathStreams& streams) {
  switch (state.algorithm) {
    case Algorithm::kDrbsgt:
      drbsgt_step(state, mixing, schedule, objective, partition, streams);
      return;
    case Algorithm::kDsgt:
      dsgt_step(state, mixing, schedule, objective, streams);
      return;
    case Algorithm::kAtc:
      atc_cyclic_step(state, mixing, schedule, objective, partition);
      return;
  }
}

EvalCount gradient_eval_counter(const SwarmState& state) {
  return {state.block_evals,
          static_cast<double>(state.block_evals) / static_cast<double>(state.num_blocks)};
}

}  // namespace drbsgt
