#include "drbsgt/harness.hpp"

#include "drbsgt/error.hpp"
#include "drbsgt/random.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <utility>

namespace drbsgt {
namespace {

constexpr std::size_t kMaxViolationSamples = 20;
constexpr std::size_t kNoiseProbeSamples = 100;
constexpr double kAveragedRho = 1e-12;

std::shared_ptr<const Objective> build_objective(const ExperimentConfig& c) {
  if (c.objective == ObjectiveKind::kQuadratic) {
    QuadraticSpec spec;
    spec.agents = c.m;
    spec.dim = c.n;
    spec.mu = c.quadratic_mu;
    spec.lip = c.quadratic_lip;
    spec.noise = c.noise;
    spec.center_scale = c.center_scale;
    spec.seed = c.master_seed;
    return make_quadratic_objective(spec);
  }
  Dataset data;
  if (c.dataset == DatasetSource::kSynthetic) {
    SyntheticSpec spec;
    spec.samples = c.samples;
    spec.dim = c.n;
    spec.mean = c.feature_mean;
    spec.stddev = c.feature_std;
    spec.flip_rate = c.flip_rate;
    spec.seed = derive_seed(c.master_seed, 0, 0, StreamPurpose::kDataset);
    data = generate_synthetic_dataset(spec);
  } else {
    LoadOptions options;
    options.labels = {c.label_rule, c.positive_class};
    options.scale_unit = c.scale_features;
    data = load_dataset(c.dataset_path, options);
    if (data.dim() != c.n) {
      throw ConfigError(
          fmt::format("n: dataset {} has {} features, config says {}", c.dataset_path,
                      data.dim(), c.n),
          "n");
    }
  }
  auto shared = std::make_shared<const Dataset>(partition_dataset(std::move(data), c.m,
                                                                  c.shard_rule));
  return std::make_shared<LogisticObjective>(std::move(shared), c.mu, c.batch);
}

struct PathOutcome {
  MetricsSeries series;
  std::optional<PathFailure> failure;
  MonitorReport monitors;
  std::exception_ptr error;
};

void note_violation(MonitorReport& report, std::string monitor, std::size_t path,
                    std::size_t k, double value, double bound) {
  if (report.samples.size() < kMaxViolationSamples) {
    report.samples.push_back({std::move(monitor), path, k, value, bound});
  }
}

class PathRunner {
 public:
  PathRunner(const ExperimentConfig& config, const Problem& problem,
             const StepSchedule& schedule, const StoragePlan& plan, std::size_t horizon)
      : config_(config), problem_(problem), schedule_(schedule), plan_(plan),
        horizon_(horizon) {}

  PathOutcome run(std::size_t path) const;

 private:
  void check_tracking(const SwarmState& state, std::size_t path, MonitorReport& report) const;

  const ExperimentConfig& config_;
  const Problem& problem_;
  const StepSchedule& schedule_;
  const StoragePlan& plan_;
  std::size_t horizon_;
};

void PathRunner::check_tracking(const SwarmState& state, std::size_t path,
                                MonitorReport& report) const {
  if (state.algorithm == Algorithm::kAtc) return;
  const double residual = tracking_residual(state);
  report.max_tracking_residual = std::max(report.max_tracking_residual, residual);
  if (!(residual <= MonitorReport::kTrackingTolerance)) {
    ++report.tracking_violations;
    note_violation(report, "tracking", path, state.iter, residual,
                   MonitorReport::kTrackingTolerance);
  }
}

PathOutcome PathRunner::run(std::size_t path) const {
  PathOutcome out;
  MonitorReport& report = out.monitors;
  const Objective& objective = *problem_.objective;
  const MixingMatrix& mixing = *problem_.mixing;
  const BlockPartition& partition = *problem_.partition;
  const double rho = mixing.rho();
  report.enabled = config_.monitors;
  report.consensus_averaged = rho < kAveragedRho;
  report.max_consensus_excess = -std::numeric_limits<double>::infinity();

  PathStreams streams = PathStreams::derive(config_.master_seed, path, config_.m);
  // One random starting point per run, shared by every path.
  Matrix x0 = initial_points(config_.m, config_.n, config_.x0, config_.master_seed, 0);
  std::size_t k = 0;
  try {
    SwarmState state =
        init_swarm(config_.algorithm, objective, partition, std::move(x0), streams);
    const std::vector<std::size_t>& stored = plan_.iterations();
    std::size_t next = 0;
    if (stored[next] == 0) {
      out.series.push(record(state, objective, problem_.x_star, schedule_));
      ++next;
    }
    if (report.enabled) check_tracking(state, path, report);

    for (k = 0; k < horizon_; ++k) {
      RowVector x_mean;
      RowVector y_mean;
      double err2 = 0.0;
      double err3 = 0.0;
      const bool tracking = state.algorithm != Algorithm::kAtc;
      if (report.enabled) {
        x_mean = row_mean(state.x);
        err2 = dispersion_squared(state.x);
        if (tracking) {
          y_mean = row_mean(state.y);
          err3 = dispersion_squared(state.y);
        }
      }
      step(state, mixing, schedule_, objective, partition, streams);

      if (report.enabled) {
        // ATC keeps the direction it just used in y; the tracking engines
        // used the tracker from before the step.
        if (!tracking) {
          y_mean = row_mean(state.y);
          err3 = dispersion_squared(state.y);
        }
        const double gamma_k = schedule_.at(k);
        const RowVector x_next = row_mean(state.x);
        const double gap = (x_next - x_mean + gamma_k * y_mean).norm() / (1.0 + x_mean.norm());
        report.max_mean_dynamics_gap = std::max(report.max_mean_dynamics_gap, gap);
        if (!(gap <= MonitorReport::kMeanDynamicsTolerance)) {
          ++report.mean_dynamics_violations;
          note_violation(report, "mean_dynamics", path, k, gap,
                         MonitorReport::kMeanDynamicsTolerance);
        }
        const double err2_next = dispersion_squared(state.x);
        const double bound = report.consensus_averaged
                                 ? MonitorReport::kAveragedTolerance
                                 : consensus_bound(err2, err3, gamma_k, rho) +
                                       MonitorReport::kConsensusSlack;
        report.max_consensus_excess =
            std::max(report.max_consensus_excess, err2_next - bound);
        if (!(err2_next <= bound)) {
          ++report.consensus_violations;
          note_violation(report, "consensus", path, k, err2_next, bound);
        }
        check_tracking(state, path, report);
        ++report.steps_checked;
      }
      if (next < stored.size() && stored[next] == state.iter) {
        out.series.push(record(state, objective, problem_.x_star, schedule_));
        ++next;
      }
    }
  } catch (const DivergenceError& e) {
    out.failure = PathFailure{path, e.iteration(), e.agent(), e.what()};
  } catch (const Error& e) {
    out.error = std::make_exception_ptr(
        Error(fmt::format("path {} iteration {}: {}", path, k, e.what())));
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

void merge_monitors(MonitorReport& into, const MonitorReport& from) {
  into.enabled = from.enabled;
  into.consensus_averaged = from.consensus_averaged;
  into.steps_checked += from.steps_checked;
  into.tracking_violations += from.tracking_violations;
  into.mean_dynamics_violations += from.mean_dynamics_violations;
  into.consensus_violations += from.consensus_violations;
  into.max_tracking_residual = std::max(into.max_tracking_residual, from.max_tracking_residual);
  into.max_mean_dynamics_gap = std::max(into.max_mean_dynamics_gap, from.max_mean_dynamics_gap);
  into.max_consensus_excess = std::max(into.max_consensus_excess, from.max_consensus_excess);
  for (const MonitorViolation& v : from.samples) {
    if (into.samples.size() < kMaxViolationSamples) into.samples.push_back(v);
  }
}

Interval interval_of(std::vector<double>& values) { return confidence_interval(values); }

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

Problem build_problem(const ExperimentConfig& config) {
  validate_config(config);
  Problem problem;
  std::vector<Edge> edges;
  if (config.graph == GraphKind::kEdgeList) edges = read_edge_list(config.edge_file);
  problem.graph = std::make_shared<const NetworkGraph>(build_graph(config.graph, config.m, edges));
  problem.mixing =
      std::make_shared<const MixingMatrix>(build_mixing_matrix(*problem.graph, config.weight_rule));
  problem.partition = std::make_shared<const BlockPartition>(config.n, config.b);

  auto objective = std::const_pointer_cast<Objective>(build_objective(config));
  const OptimumResult optimum = solve_optimum(*objective);
  if (config.objective == ObjectiveKind::kLogistic) {
    const std::vector<Vector> probes = {Vector::Zero(static_cast<Eigen::Index>(config.n)),
                                        optimum.x};
    Rng rng = make_stream(config.master_seed, 0, 0, StreamPurpose::kProbe);
    objective->set_noise_bound(estimate_noise_bound(*objective, probes, kNoiseProbeSamples, rng));
  }
  problem.objective = std::move(objective);
  problem.x_star = optimum.x;
  problem.optimum_residual = optimum.residual;
  problem.key = problem_key(config);
  return problem;
}

ScheduleReport schedule_report(const ExperimentConfig& config) {
  validate_config(config);
  std::vector<Edge> edges;
  if (config.graph == GraphKind::kEdgeList) edges = read_edge_list(config.edge_file);
  const NetworkGraph graph = build_graph(config.graph, config.m, edges);
  const MixingMatrix mixing = build_mixing_matrix(graph, config.weight_rule);
  const auto objective = build_objective(config);
  return validate_schedule(StepSchedule(config.gamma, config.Gamma), config.b,
                           objective->constants().mu, objective->constants().lip,
                           mixing.rho());
}

bool RunResult::failed(std::size_t path) const {
  return std::any_of(failures.begin(), failures.end(),
                     [path](const PathFailure& f) { return f.path == path; });
}

std::vector<MetricsSeries> RunResult::surviving_paths() const {
  std::vector<MetricsSeries> out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    if (!failed(p)) out.push_back(paths[p]);
  }
  return out;
}

std::size_t worker_count(const ExperimentConfig& config) {
  std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, config.paths));
  if (const char* cap = std::getenv("DRBSGT_MAX_WORKERS")) {
    std::size_t value = 0;
    const char* end = cap + std::char_traits<char>::length(cap);
    const auto [ptr, ec] = std::from_chars(cap, end, value);
    if (ec == std::errc() && ptr == end && value > 0) workers = std::min(workers, value);
  }
  return workers;
}

std::vector<AggregateRow> aggregate_paths(std::span<const MetricsSeries> paths) {
  std::vector<AggregateRow> rows;
  if (paths.empty()) return rows;
  const std::size_t length = paths.front().rows().size();
  for (const MetricsSeries& s : paths) {
    if (s.rows().size() != length) {
      throw ArgumentError("aggregated paths must store the same iterations");
    }
  }
  std::vector<double> err1(paths.size());
  std::vector<double> err2(paths.size());
  std::vector<double> err3(paths.size());
  std::vector<double> objective(paths.size());
  for (std::size_t j = 0; j < length; ++j) {
    AggregateRow row;
    const MetricsRow& first = paths.front().rows()[j];
    row.k = first.k;
    row.gamma_k = first.gamma_k;
    row.block_evals = first.block_evals;
    row.paths = paths.size();
    for (std::size_t p = 0; p < paths.size(); ++p) {
      const MetricsRow& r = paths[p].rows()[j];
      if (r.k != first.k) throw ArgumentError("aggregated paths must store the same iterations");
      err1[p] = r.err1;
      err2[p] = r.err2;
      err3[p] = r.err3;
      objective[p] = r.objective;
      row.tracking_residual_max = std::max(row.tracking_residual_max, r.tracking_residual);
    }
    row.err1 = interval_of(err1);
    row.err2 = interval_of(err2);
    row.err3 = interval_of(err3);
    row.objective = interval_of(objective);
    rows.push_back(row);
  }
  return rows;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const Problem problem = build_problem(config);
  return run_experiment(config, problem);
}

RunResult run_experiment(const ExperimentConfig& config, const Problem& problem) {
  validate_config(config);
  if (problem.key != problem_key(config)) {
    throw ArgumentError("config does not describe the supplied problem");
  }
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  result.config = config;
  result.horizon = effective_horizon(config);
  if (result.horizon == 0) {
    throw ArgumentError(fmt::format("budget {} does not cover a single {} iteration",
                                    config.budget, to_string(config.algorithm)));
  }
  result.rho = problem.mixing->rho();
  result.optimum_residual = problem.optimum_residual;
  result.constants = problem.objective->constants();
  const StepSchedule schedule(config.gamma, config.Gamma);
  result.schedule = validate_schedule(schedule, config.b, result.constants.mu,
                                      result.constants.lip, result.rho);

  const StoragePlan plan(result.horizon, config.dense_until, config.points_per_decade);
  const PathRunner runner(config, problem, schedule, plan, result.horizon);
  std::vector<PathOutcome> outcomes(config.paths);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t p = next++; p < config.paths; p = next++) outcomes[p] = runner.run(p);
  };
  const std::size_t workers = worker_count(config);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t p = 0; p < outcomes.size(); ++p) {
    if (outcomes[p].error) std::rethrow_exception(outcomes[p].error);
  }
  result.monitors.max_consensus_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < outcomes.size(); ++p) {
    PathOutcome& o = outcomes[p];
    merge_monitors(result.monitors, o.monitors);
    if (o.failure) result.failures.push_back(*o.failure);
    result.paths.push_back(std::move(o.series));
  }
  if (result.monitors.steps_checked == 0) result.monitors.max_consensus_excess = 0.0;
  const std::vector<MetricsSeries> surviving = result.surviving_paths();
  result.aggregate = aggregate_paths(surviving);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!config.output_dir.empty()) write_run_outputs(result, config.output_dir);
  return result;
}

void write_run_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = fmt::output_file((dir / "series.csv").string());
    out.print("path,k,gamma_k,err1,err2,err3,objective,tracking_residual,block_evals\n");
    for (std::size_t p = 0; p < result.paths.size(); ++p) {
      for (const MetricsRow& r : result.paths[p].rows()) {
        out.print("{},{},{},{},{},{},{},{},{}\n", p, r.k, num(r.gamma_k), num(r.err1),
                  num(r.err2), num(r.err3), num(r.objective), num(r.tracking_residual),
                  r.block_evals);
      }
    }
  }
  {
    auto out = fmt::output_file((dir / "aggregate.csv").string());
    out.print(
        "k,gamma_k,block_evals,paths,err1_mean,err1_lo,err1_hi,err2_mean,err2_lo,err2_hi,"
        "err3_mean,err3_lo,err3_hi,objective_mean,objective_lo,objective_hi,"
        "tracking_residual_max\n");
    for (const AggregateRow& r : result.aggregate) {
      out.print("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.k, num(r.gamma_k),
                r.block_evals, r.paths, num(r.err1.mean), num(r.err1.lo), num(r.err1.hi),
                num(r.err2.mean), num(r.err2.lo), num(r.err2.hi), num(r.err3.mean),
                num(r.err3.lo), num(r.err3.hi), num(r.objective.mean), num(r.objective.lo),
                num(r.objective.hi), num(r.tracking_residual_max));
    }
  }
  {
    auto out = fmt::output_file((dir / "schedule_report.txt").string());
    out.print("{}", result.schedule.to_text());
  }
  auto out = fmt::output_file((dir / "summary.txt").string());
  const ExperimentConfig& c = result.config;
  out.print("algorithm: {}\n", to_string(c.algorithm));
  out.print("problem: {}\n", problem_key(c));
  out.print("horizon: {}\n", result.horizon);
  out.print("paths: {} ({} failed)\n", result.paths.size(), result.failures.size());
  out.print("rho_W: {}\n", num(result.rho));
  out.print("mu: {}\nL: {}\nnu_squared: {}\n", num(result.constants.mu),
            num(result.constants.lip), num(result.constants.noise_bound));
  out.print("optimum_residual: {}\n", num(result.optimum_residual));
  out.print("schedule_passes: {}\n", result.schedule.passes());
  for (const PathFailure& f : result.failures) {
    out.print("failure: path {} iteration {} agent {}: {}\n", f.path, f.iteration, f.agent,
              f.message);
  }
  if (!result.aggregate.empty()) {
    const AggregateRow& last = result.aggregate.back();
    out.print("final k: {}\nfinal block_evals: {}\n", last.k, last.block_evals);
    out.print("final objective: {} [{}, {}]\n", num(last.objective.mean),
              num(last.objective.lo), num(last.objective.hi));
    out.print("final err1: {} [{}, {}]\n", num(last.err1.mean), num(last.err1.lo),
              num(last.err1.hi));
    out.print("final err2: {} [{}, {}]\n", num(last.err2.mean), num(last.err2.lo),
              num(last.err2.hi));
    const std::vector<MetricsSeries> surviving = result.surviving_paths();
    const std::size_t first = std::min<std::size_t>(c.dense_until, result.horizon / 10);
    for (const auto& [name, field] :
         {std::pair{"err1", Field::kErr1}, std::pair{"err2", Field::kErr2}}) {
      try {
        const RateFit fit = fit_rate(surviving, field, {first, result.horizon}, c.Gamma);
        out.print("slope {} over [{}, {}]: {} (r^2 {})\n", name, first, result.horizon,
                  num(fit.slope), num(fit.r_squared));
      } catch (const DegenerateFitError& e) {
        out.print("slope {}: not fitted ({})\n", name, e.what());
      }
    }
  }
  const MonitorReport& m = result.monitors;
  if (m.enabled) {
    out.print("monitor steps: {}\n", m.steps_checked);
    out.print("tracking violations: {} (max residual {})\n", m.tracking_violations,
              num(m.max_tracking_residual));
    out.print("mean dynamics violations: {} (max gap {})\n", m.mean_dynamics_violations,
              num(m.max_mean_dynamics_gap));
    out.print("consensus violations: {} (max excess {}{})\n", m.consensus_violations,
              num(m.max_consensus_excess), m.consensus_averaged ? ", averaged check" : "");
    for (const MonitorViolation& v : m.samples) {
      out.print("violation: {} path {} k {}: {} > {}\n", v.monitor, v.path, v.k, num(v.value),
                num(v.bound));
    }
  }
}

ComparisonTable compare_algorithms(std::span<const ExperimentConfig> configs,
                                   std::uint64_t budget, std::size_t grid_points) {
  if (configs.empty()) throw ArgumentError("compare needs at least one config");
  if (budget == 0) throw ArgumentError("compare needs a positive block-evaluation budget");
  const std::string key = problem_key(configs.front());
  for (const ExperimentConfig& c : configs) {
    if (problem_key(c) != key) {
      throw ArgumentError(fmt::format("configs describe different problems:\n  {}\n  {}", key,
                                      problem_key(c)));
    }
  }
  const Problem problem = build_problem(configs.front());

  ComparisonTable table;
  for (const ExperimentConfig& c : configs) {
    ExperimentConfig run = c;
    run.budget = budget;
    run.output_dir.clear();
    if (run.algorithm == Algorithm::kAtc) run.paths = 1;
    table.algorithms.push_back(run.algorithm);
    table.runs.push_back(run_experiment(run, problem));
  }

  std::uint64_t lo = 0;
  std::uint64_t hi = budget;
  for (const RunResult& r : table.runs) {
    if (r.aggregate.empty()) throw ArgumentError("every path of a compared run diverged");
    lo = std::max(lo, r.aggregate.front().block_evals);
    hi = std::min(hi, r.aggregate.back().block_evals);
  }
  lo = std::max<std::uint64_t>(lo, 1);
  if (hi < lo) hi = lo;
  for (std::size_t j = 0; j < grid_points; ++j) {
    const double t = grid_points == 1 ? 1.0
                                      : static_cast<double>(j) /
                                            static_cast<double>(grid_points - 1);
    const double value = std::exp(std::log(static_cast<double>(lo)) +
                                  t * (std::log(static_cast<double>(hi)) -
                                       std::log(static_cast<double>(lo))));
    const auto point = std::clamp<std::uint64_t>(
        static_cast<std::uint64_t>(std::llround(value)), lo, hi);
    if (table.budgets.empty() || point > table.budgets.back()) table.budgets.push_back(point);
  }
  if (table.budgets.empty() || table.budgets.back() != hi) table.budgets.push_back(hi);

  for (const RunResult& r : table.runs) {
    const std::vector<MetricsSeries> surviving = r.surviving_paths();
    std::vector<ComparisonCell> row;
    for (std::uint64_t point : table.budgets) {
      std::vector<double> objective;
      std::vector<double> err1;
      std::vector<double> err2;
      for (const MetricsSeries& s : surviving) {
        const auto& rows = s.rows();
        auto it = std::upper_bound(rows.begin(), rows.end(), point,
                                   [](std::uint64_t b, const MetricsRow& m) {
                                     return b < m.block_evals;
                                   });
        if (it == rows.begin()) continue;
        --it;
        objective.push_back(it->objective);
        err1.push_back(it->err1);
        err2.push_back(it->err2);
      }
      ComparisonCell cell;
      cell.paths = objective.size();
      if (!objective.empty()) {
        cell.objective = confidence_interval(objective);
        cell.err1 = confidence_interval(err1);
        cell.err2 = confidence_interval(err2);
      }
      row.push_back(cell);
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

void write_comparison(const ComparisonTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto out = fmt::output_file((dir / "comparison.csv").string());
  out.print(
      "block_evals,algorithm,paths,objective_mean,objective_lo,objective_hi,err1_mean,"
      "err1_lo,err1_hi,err2_mean,err2_lo,err2_hi\n");
  for (std::size_t j = 0; j < table.budgets.size(); ++j) {
    for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
      const ComparisonCell& c = table.cells[a][j];
      out.print("{},{},{},{},{},{},{},{},{},{},{},{}\n", table.budgets[j],
                to_string(table.algorithms[a]), c.paths, num(c.objective.mean),
                num(c.objective.lo), num(c.objective.hi), num(c.err1.mean), num(c.err1.lo),
                num(c.err1.hi), num(c.err2.mean), num(c.err2.lo), num(c.err2.hi));
    }
  }
  for (std::size_t a = 0; a < table.runs.size(); ++a) {
    write_run_outputs(table.runs[a], dir / fmt::format("{}_{}", a, to_string(table.algorithms[a])));
  }
}

}  // namespace drbsgt
