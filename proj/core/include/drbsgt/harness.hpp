#pragma once

#include "drbsgt/algorithms.hpp"
#include "drbsgt/blocks.hpp"
#include "drbsgt/config.hpp"
#include "drbsgt/metrics.hpp"
#include "drbsgt/network.hpp"
#include "drbsgt/objectives.hpp"
#include "drbsgt/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace drbsgt {

/// Immutable inputs shared by every sample path of a run.
struct Problem {
  std::shared_ptr<const NetworkGraph> graph;
  std::shared_ptr<const MixingMatrix> mixing;
  std::shared_ptr<const Objective> objective;
  std::shared_ptr<const BlockPartition> partition;
  Vector x_star;
  double optimum_residual = 0.0;  // ‖Σ∇f_i(x*)‖
  std::string key;                // problem_key of the config it was built from
};

/// Graph, W, oracle (ν² measured for logistic losses), partition and x*.
Problem build_problem(const ExperimentConfig& config);

/// Stepsize conditions for `config` using measured ρ_W, μ and L; skips x*.
ScheduleReport schedule_report(const ExperimentConfig& config);

struct MonitorViolation {
  std::string monitor;  // "tracking", "mean_dynamics" or "consensus"
  std::size_t path = 0;
  std::size_t k = 0;
  double value = 0.0;
  double bound = 0.0;
};

/// Identity and inequality checks evaluated after every step.
struct MonitorReport {
  static constexpr double kTrackingTolerance = 1e-9;
  static constexpr double kMeanDynamicsTolerance = 1e-12;
  static constexpr double kConsensusSlack = 1e-10;
  static constexpr double kAveragedTolerance = 1e-12;

  bool enabled = false;
  /// ρ_W ≈ 0: the consensus recursion is replaced by err2 ≤ kAveragedTolerance.
  bool consensus_averaged = false;
  std::uint64_t steps_checked = 0;
  std::uint64_t tracking_violations = 0;
  std::uint64_t mean_dynamics_violations = 0;
  std::uint64_t consensus_violations = 0;
  double max_tracking_residual = 0.0;
  double max_mean_dynamics_gap = 0.0;  // ‖x̄_{k+1} − x̄_k + γ_k ȳ‖ / (1 + ‖x̄_k‖)
  double max_consensus_excess = 0.0;   // max(lhs − rhs), may be negative
  std::vector<MonitorViolation> samples;  // first few violations

  std::uint64_t total_violations() const {
    return tracking_violations + mean_dynamics_violations + consensus_violations;
  }
};

struct PathFailure {
  std::size_t path = 0;
  std::size_t iteration = 0;
  std::size_t agent = 0;
  std::string message;
};

struct AggregateRow {
  std::size_t k = 0;
  double gamma_k = 0.0;
  std::uint64_t block_evals = 0;
  std::size_t paths = 0;
  Interval err1;
  Interval err2;
  Interval err3;
  Interval objective;
  double tracking_residual_max = 0.0;
};

struct RunResult {
  ExperimentConfig config;
  std::size_t horizon = 0;
  double rho = 0.0;
  double optimum_residual = 0.0;
  ObjectiveConstants constants;
  ScheduleReport schedule;
  std::vector<MetricsSeries> paths;  // index = path id; failed paths keep their prefix
  std::vector<PathFailure> failures;
  std::vector<AggregateRow> aggregate;  // over non-failed paths
  MonitorReport monitors;
  double wall_seconds = 0.0;

  bool failed(std::size_t path) const;
  /// Series of the paths that reached the horizon.
  std::vector<MetricsSeries> surviving_paths() const;
};

/// Worker threads actually used: min(config.workers, paths, DRBSGT_MAX_WORKERS).
std::size_t worker_count(const ExperimentConfig& config);

/// Runs every sample path of `config`. Writes the output files when
/// config.output_dir is set.
RunResult run_experiment(const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config, const Problem& problem);

/// series.csv, aggregate.csv, summary.txt and schedule_report.txt.
void write_run_outputs(const RunResult& result, const std::filesystem::path& dir);

std::vector<AggregateRow> aggregate_paths(std::span<const MetricsSeries> paths);

struct ComparisonCell {
  std::size_t paths = 0;
  Interval objective;
  Interval err1;
  Interval err2;
};

struct ComparisonTable {
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> budgets;            // block-evaluation grid
  std::vector<std::vector<ComparisonCell>> cells;  // [algorithm][budget point]
  std::vector<RunResult> runs;
};

/// Runs every config against one shared problem for `budget` block
/// evaluations and aligns the series on the block-evaluation axis. ATC is
/// deterministic and runs a single path. Throws ArgumentError when the
/// configs disagree on the problem.
ComparisonTable compare_algorithms(std::span<const ExperimentConfig> configs,
                                   std::uint64_t budget, std::size_t grid_points = 50);

/// comparison.csv: one row per (budget point, algorithm).
void write_comparison(const ComparisonTable& table, const std::filesystem::path& dir);

}  // namespace drbsgt
