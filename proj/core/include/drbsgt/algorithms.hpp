#pragma once

#include "drbsgt/blocks.hpp"
#include "drbsgt/linalg.hpp"
#include "drbsgt/network.hpp"
#include "drbsgt/objectives.hpp"
#include "drbsgt/random.hpp"
#include "drbsgt/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace drbsgt {

enum class Algorithm { kDrbsgt, kDsgt, kAtc };

std::string_view to_string(Algorithm algorithm);

/// Iterates of one sample path.
///
/// For the tracking engines `y` is the tracker y_k and `cache[i]` holds the
/// stochastic (block) gradient agent i evaluated at (x_{i,k}, ξ_{i,k}), which
/// is subtracted again at step k+1. For ATC `y` is the direction the last
/// step used (the embedded active-block gradients) and the cache is empty.
struct SwarmState {
  Algorithm algorithm = Algorithm::kDrbsgt;
  Matrix x;
  Matrix y;
  std::vector<std::size_t> last_block;  // ℓ_{i,k}
  std::vector<BlockRange> cached_range;
  std::vector<Vector> cache;
  std::size_t iter = 0;
  std::size_t num_blocks = 1;
  std::uint64_t block_evals = 0;  // block-gradient evaluations, all agents
};

/// Per-agent random streams of one sample path.
struct PathStreams {
  std::vector<Rng> sample;  // ξ
  std::vector<Rng> block;   // ℓ

  static PathStreams derive(std::uint64_t master_seed, std::uint64_t path,
                            std::size_t num_agents);
};

enum class InitialPoint { kZeros, kGaussian };

/// x_{i,0} rows: zeros, or N(0,1) entries from the path's init stream (all
/// agents drawn in order from agent-indexed streams).
Matrix initial_points(std::size_t num_agents, std::size_t dim, InitialPoint rule,
                      std::uint64_t master_seed, std::uint64_t path);

/// Lines 1-2 of the method: draw ℓ_{i,0}, ξ_{i,0} and seed y_{i,0} with the
/// block gradient on block ℓ_{i,0} (the full gradient for DSGT; nothing for
/// ATC).
SwarmState init_swarm(Algorithm algorithm, const Objective& objective,
                      const BlockPartition& partition, Matrix x0, PathStreams& streams);

/// One DRBSGT iteration: x ← W(x − γ_k y); draw ℓ_{i,k+1}, ξ_{i,k+1};
/// y ← W y + U_new ∇^new − U_old ∇^old per agent.
void drbsgt_step(SwarmState& state, const MixingMatrix& mixing,
                 const StepSchedule& schedule, const Objective& objective,
                 const BlockPartition& partition, PathStreams& streams);

/// DSGT: the same recursion with full stochastic gradients.
void dsgt_step(SwarmState& state, const MixingMatrix& mixing, const StepSchedule& schedule,
               const Objective& objective, PathStreams& streams);

/// Deterministic adapt-then-combine with cyclic blocks ℓ_k = k mod b: every
/// agent descends along its exact local gradient on the active block, then
/// all blocks are mixed by W.
void atc_cyclic_step(SwarmState& state, const MixingMatrix& mixing,
                     const StepSchedule& schedule, const Objective& objective,
                     const BlockPartition& partition);

void step(SwarmState& state, const MixingMatrix& mixing, const StepSchedule& schedule,
          const Objective& objective, const BlockPartition& partition,
          PathStreams& streams);

struct EvalCount {
  std::uint64_t block_evals = 0;
  double full_equiv = 0.0;  // block_evals · (n/b) / n
};

EvalCount gradient_eval_counter(const SwarmState& state);

/// Paths whose iterate norm exceeds this are aborted.
inline constexpr double kDivergenceBound = 1e12;

}  // namespace drbsgt
