// Acceptance run: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers. Exit status is 0 iff
// everything that ran passed.
#include "drbsgt/algorithms.hpp"
#include "drbsgt/blocks.hpp"
#include "drbsgt/cli.hpp"
#include "drbsgt/config.hpp"
#include "drbsgt/harness.hpp"
#include "drbsgt/metrics.hpp"
#include "drbsgt/network.hpp"
#include "drbsgt/objectives.hpp"
#include "drbsgt/random.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace drbsgt;

namespace {

struct Verdict {
  bool passed;
  std::string detail;
};

const fs::path kSourceDir = DRBSGT_SOURCE_DIR;

Vector gaussian(Eigen::Index n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (auto& c : v) c = d(rng);
  return v;
}

ExperimentConfig tracking_suite_config(Algorithm algorithm) {
  ExperimentConfig c;
  c.algorithm = algorithm;
  c.graph = GraphKind::kRing;
  c.m = 5;
  c.n = 20;
  c.b = 4;
  c.noise = 0.1;
  c.gamma = 12.0;
  c.Gamma = 150.0;
  c.horizon = 2000;
  c.paths = algorithm == Algorithm::kAtc ? 1 : 5;
  c.master_seed = 2024;
  c.workers = 1;
  return c;
}

// Runs of the criterion-2 suite are shared between criteria 2, 3 and 5.
const RunResult& suite_run(Algorithm algorithm) {
  static std::vector<std::pair<Algorithm, RunResult>> cache;
  for (const auto& [a, r] : cache)
    if (a == algorithm) return r;
  cache.emplace_back(algorithm, run_experiment(tracking_suite_config(algorithm)));
  return cache.back().second;
}

Verdict block_error_enumeration() {
  Rng rng(101);
  double worst_mean = 0.0;
  double worst_square = 0.0;
  for (std::size_t b : {1, 2, 3, 4, 6, 12}) {
    const BlockPartition partition(12, b);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector g = gaussian(12, rng, 3.0);
      // Oracle: average the error U_ℓ b g_ℓ − g over ℓ directly.
      Vector mean = Vector::Zero(12);
      double square = 0.0;
      for (std::size_t l = 0; l < b; ++l) {
        const BlockRange r = partition.block(l);
        Vector e = -g;
        e.segment(static_cast<Eigen::Index>(r.offset), static_cast<Eigen::Index>(r.size)) +=
            static_cast<double>(b) *
            g.segment(static_cast<Eigen::Index>(r.offset), static_cast<Eigen::Index>(r.size));
        mean += e / static_cast<double>(b);
        square += e.squaredNorm() / static_cast<double>(b);
      }
      const double expected = static_cast<double>(b - 1) * g.squaredNorm();
      const BlockErrorMoments lib = enumerate_block_error_moments(as_span(g), partition);
      worst_mean = std::max({worst_mean, mean.norm(), lib.mean_error.norm()});
      worst_square = std::max({worst_square, std::abs(square - expected) / std::max(1.0, expected),
                               std::abs(lib.mean_squared_norm - expected) / std::max(1.0, expected)});
    }
  }
  const bool ok = worst_mean <= 1e-12 && worst_square <= 1e-12;
  return {ok, fmt::format("max |mean error| {:.3g}, max rel. second-moment gap {:.3g}", worst_mean,
                          worst_square)};
}

Verdict tracking_identity() {
  const RunResult& r = suite_run(Algorithm::kDrbsgt);
  const MonitorReport& mon = r.monitors;
  const bool ok = mon.steps_checked == 5 * 2000 && mon.tracking_violations == 0 &&
                  mon.max_tracking_residual <= 1e-9 && r.failures.empty();
  return {ok, fmt::format("{} steps checked, max residual {:.3g}, violations {}",
                          mon.steps_checked, mon.max_tracking_residual, mon.tracking_violations)};
}

Verdict mean_dynamics() {
  bool ok = true;
  std::string detail;
  for (Algorithm a : {Algorithm::kDrbsgt, Algorithm::kDsgt, Algorithm::kAtc}) {
    const MonitorReport& mon = suite_run(a).monitors;
    ok = ok && mon.steps_checked > 0 && mon.mean_dynamics_violations == 0 &&
         mon.max_mean_dynamics_gap <= 1e-12;
    detail += fmt::format("{}: max gap {:.3g} over {} steps; ", to_string(a),
                          mon.max_mean_dynamics_gap, mon.steps_checked);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Verdict single_block_reduction() {
  QuadraticSpec spec;
  spec.agents = 5;
  spec.dim = 20;
  spec.noise = 0.1;
  spec.seed = 9;
  const auto objective = make_quadratic_objective(spec);
  const MixingMatrix mixing =
      build_mixing_matrix(build_graph(GraphKind::kRing, 5), WeightRule::kMetropolis);
  const BlockPartition partition(20, 1);
  const StepSchedule schedule(12.0, 150.0);
  const Matrix x0 = initial_points(5, 20, InitialPoint::kGaussian, 9, 0);
  PathStreams sa = PathStreams::derive(9, 0, 5);
  PathStreams sb = PathStreams::derive(9, 0, 5);
  SwarmState a = init_swarm(Algorithm::kDrbsgt, *objective, partition, x0, sa);
  SwarmState b = init_swarm(Algorithm::kDsgt, *objective, partition, x0, sb);
  std::size_t mismatch = 0;
  for (std::size_t k = 0; k < 500; ++k) {
    drbsgt_step(a, mixing, schedule, *objective, partition, sa);
    dsgt_step(b, mixing, schedule, *objective, sb);
    if (a.x != b.x || a.y != b.y) ++mismatch;
  }
  return {mismatch == 0, fmt::format("{} of 500 steps differ", mismatch)};
}

Verdict consensus_inequality() {
  bool ok = true;
  std::string detail;
  for (Algorithm a : {Algorithm::kDrbsgt, Algorithm::kDsgt}) {
    const RunResult& r = suite_run(a);
    ok = ok && !r.monitors.consensus_averaged && r.monitors.consensus_violations == 0;
    detail += fmt::format("{} rho {:.6f}: {} violations, max excess {:.3g}; ", to_string(a), r.rho,
                          r.monitors.consensus_violations, r.monitors.max_consensus_excess);
  }
  ExperimentConfig c = tracking_suite_config(Algorithm::kDrbsgt);
  c.graph = GraphKind::kComplete;
  const RunResult complete = run_experiment(c);
  double worst = 0.0;
  for (const MetricsSeries& s : complete.paths)
    for (const MetricsRow& row : s.rows())
      if (row.k >= 1) worst = std::max(worst, row.err2);
  ok = ok && worst <= 1e-12 && complete.failures.empty();
  detail += fmt::format("complete graph max err2 (k >= 1) {:.3g}", worst);
  return {ok, detail};
}

double dense_rho(const Matrix& w) {
  const auto m = w.rows();
  const Matrix deflated = w - Matrix::Constant(m, m, 1.0 / static_cast<double>(m));
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(deflated);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Verdict spectral_gap_check() {
  const MixingMatrix ring =
      build_mixing_matrix(build_graph(GraphKind::kRing, 5), WeightRule::kMetropolis);
  const double closed = (1.0 + 2.0 * std::cos(2.0 * std::numbers::pi / 5.0)) / 3.0;
  const double ring_gap = std::abs(ring.rho() - closed);
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 11);
    // Random spanning tree plus extra edges with probability 0.3.
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < m; ++i) {
      edges.emplace_back(std::uniform_int_distribution<std::size_t>(0, i - 1)(rng), i);
    }
    std::bernoulli_distribution extra(0.3);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (std::ranges::find(edges, Edge{i, j}) == edges.end() && extra(rng))
          edges.emplace_back(i, j);
    const MixingMatrix w = build_mixing_matrix(NetworkGraph(m, edges), WeightRule::kMetropolis);
    worst = std::max(worst, std::abs(w.rho() - dense_rho(w.weights())));
  }
  return {ring_gap <= 1e-8 && worst <= 1e-8,
          fmt::format("ring rho {:.12f} vs {:.12f}; random graphs max gap {:.3g}", ring.rho(),
                      closed, worst)};
}

Verdict rate_slopes() {
  ExperimentConfig c = load_config(kSourceDir / "configs" / "quadratic_ring.json");
  c.workers = 1;
  c.output_dir.clear();
  const RunResult r = run_experiment(c);
  const std::vector<MetricsSeries> paths = r.surviving_paths();
  const FitWindow window{1000, 100000};
  const RateFit e1 = fit_rate(paths, Field::kErr1, window, c.Gamma);
  const RateFit e2 = fit_rate(paths, Field::kErr2, window, c.Gamma);
  std::vector<double> err3;
  for (const AggregateRow& row : r.aggregate)
    if (row.k >= window.first && row.k <= window.last) err3.push_back(row.err3.mean);
  std::vector<double> sorted = err3;
  std::ranges::sort(sorted);
  const double median = sorted[sorted.size() / 2];
  const double peak = sorted.back();
  const bool ok = r.schedule.passes() && paths.size() == 20 && c.horizon == 100000 &&
                  e1.slope >= -1.3 && e1.slope <= -0.7 && e2.slope >= -2.4 && e2.slope <= -1.6 &&
                  peak <= 10.0 * median;
  return {ok, fmt::format("schedule {}, slope err1 {:.4f}, slope err2 {:.4f}, err3 max/median {:.3f}",
                          r.schedule.passes() ? "valid" : "invalid", e1.slope, e2.slope,
                          peak / median)};
}

// Worst (lhs − rhs)/‖x − y‖ for ‖(x − α∇f(x)) − (y − α∇f(y))‖ ≤ (1 − μα)‖x − y‖ at α = 1/L.
double contraction_excess(const Objective& f, Rng& rng, double scale) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  double worst = -1.0;
  Vector gx(n), gy(n);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = gaussian(n, rng, scale);
    const Vector y = gaussian(n, rng, scale);
    f.total_gradient(as_span(x), as_span(gx));
    f.total_gradient(as_span(y), as_span(gy));
    const double lip = f.total_lipschitz();
    const double mu = static_cast<double>(f.num_agents()) * f.constants().mu;
    const double alpha = 1.0 / lip;
    const double lhs = ((x - alpha * gx) - (y - alpha * gy)).norm();
    const double rhs = (1.0 - mu * alpha) * (x - y).norm();
    worst = std::max(worst, (lhs - rhs) / (x - y).norm());
  }
  return worst;
}

// Largest |mean(g − ∇f)| / (ν̂/√N) over coordinates.
double unbiasedness_score(const Objective& f, Rng& rng, std::size_t draws) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  double worst = 0.0;
  for (std::size_t agent = 0; agent < f.num_agents(); ++agent) {
    const Vector x = gaussian(n, rng, 0.1);
    Vector exact(n), draw(n);
    f.gradient(agent, as_span(x), as_span(exact));
    Vector sum = Vector::Zero(n), sq = Vector::Zero(n);
    for (std::size_t t = 0; t < draws; ++t) {
      f.stochastic_gradient(agent, as_span(x), rng, as_span(draw));
      const Vector d = draw - exact;
      sum += d;
      sq += d.cwiseProduct(d);
    }
    const double count = static_cast<double>(draws);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double mean = sum(j) / count;
      const double sd = std::sqrt(std::max(sq(j) / count - mean * mean, 0.0));
      if (sd == 0.0) {
        worst = std::max(worst, mean == 0.0 ? 0.0 : 1e300);
      } else {
        worst = std::max(worst, std::abs(mean) / (sd / std::sqrt(count)));
      }
    }
  }
  return worst;
}

Verdict objective_properties() {
  QuadraticSpec spec;
  spec.agents = 5;
  spec.dim = 20;
  spec.noise = 0.1;
  spec.seed = 5;
  const auto quadratic = make_quadratic_objective(spec);
  ExperimentConfig c = load_config(kSourceDir / "configs" / "logistic_drbsgt.json");
  c.samples = 200;
  c.n = 20;
  c.b = 4;
  c.batch = 10;
  const Problem logistic = build_problem(c);
  Rng rng(55);
  const double q_excess = contraction_excess(*quadratic, rng, 2.0);
  const double l_excess = contraction_excess(*logistic.objective, rng, 0.2);
  // 5 standard errors per coordinate; the maximum over ~40 coordinates per agent.
  const double q_unbiased = unbiasedness_score(*quadratic, rng, 20000);
  const double l_unbiased = unbiasedness_score(*logistic.objective, rng, 20000);
  const bool ok = q_excess <= 1e-12 && l_excess <= 1e-12 && q_unbiased <= 5.0 && l_unbiased <= 5.0;
  return {ok, fmt::format("contraction excess quad {:.3g} logistic {:.3g}; unbiasedness max z quad "
                          "{:.3f} logistic {:.3f}",
                          q_excess, l_excess, q_unbiased, l_unbiased)};
}

Verdict algorithm_ordering() {
  const ExperimentConfig drbsgt = load_config(kSourceDir / "configs" / "logistic_drbsgt.json");
  const ExperimentConfig atc = load_config(kSourceDir / "configs" / "logistic_atc.json");
  const std::uint64_t budget = 100000;
  std::size_t wins = 0;
  std::string detail;
  std::string trace;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig a = drbsgt;
    ExperimentConfig b = atc;
    a.master_seed = b.master_seed = seed;
    a.workers = b.workers = 1;
    a.output_dir.clear();
    b.output_dir.clear();
    const std::vector<ExperimentConfig> configs = {a, b};
    const ComparisonTable t = compare_algorithms(configs, budget);
    const double ours = t.cells[0].back().objective.mean;
    const double theirs = t.cells[1].back().objective.mean;
    if (ours <= theirs) ++wins;
    detail += fmt::format("{}{:+.2e}", seed == 1 ? "" : " ", (ours - theirs) / theirs);
    if (seed == 1) {
      const Problem p = build_problem(a);
      trace = fmt::format("; seed 1 objective start {:.6g}, drbsgt {:.6g}, atc {:.6g}, optimum {:.6g}",
                          t.runs[0].aggregate.front().objective.mean, ours, theirs,
                          p.objective->total_value(as_span(p.x_star)));
    }
  }
  return {wins >= 9, fmt::format("drbsgt <= atc in {}/10 seeds at budget {} (relative gaps: {}){}",
                                 wins, budget, detail, trace)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const fs::path base = fs::temp_directory_path() / "drbsgt_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  std::ofstream(base / "run.json") << R"({"horizon": 2000, "paths": 4, "gamma": 12,
      "Gamma": 150, "workers": 2, "master_seed": 31})";
  std::vector<std::string> outputs;
  for (const char* name : {"a", "b"}) {
    const std::string cfg = (base / "run.json").string();
    const std::string out = (base / name).string();
    const char* argv[] = {"drbsgt", "run", "--config", cfg.c_str(), "--out", out.c_str(), "--quiet"};
    std::ostringstream sink;
    if (run_cli(7, argv, sink, sink) != kExitOk) return {false, "run failed: " + sink.str()};
  }
  bool ok = true;
  std::string detail;
  for (const char* file : {"series.csv", "aggregate.csv"}) {
    const std::string a = slurp(base / "a" / file);
    const std::string b = slurp(base / "b" / file);
    ok = ok && !a.empty() && a == b;
    detail += fmt::format("{} {} ({} bytes); ", file, a == b ? "identical" : "differs", a.size());
  }
  fs::remove_all(base);
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

const std::vector<std::pair<int, std::function<Verdict()>>> kCriteria = {
    {1, block_error_enumeration},      {2, tracking_identity},    {3, mean_dynamics},
    {4, single_block_reduction}, {5, consensus_inequality}, {6, spectral_gap_check},
    {7, rate_slopes},            {8, objective_properties}, {9, algorithm_ordering},
    {10, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    int n = 0;
    const std::string_view arg(argv[i]);
    const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    if (ec != std::errc() || end != arg.data() + arg.size() || n < 1 || n > 10) {
      fmt::print(stderr, "usage: {} [criterion 1-10]...\n", argv[0]);
      return 1;
    }
    wanted.push_back(n);
  }
  bool all_passed = true;
  for (const auto& [id, check] : kCriteria) {
    if (!wanted.empty() && std::ranges::find(wanted, id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("criterion {}: {} ({:.2f} s) {}\n", id, v.passed ? "PASS" : "FAIL", seconds,
               v.detail);
    std::fflush(stdout);
    all_passed = all_passed && v.passed;
  }
  return all_passed ? 0 : 2;
}
