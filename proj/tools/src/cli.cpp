#include "drbsgt/cli.hpp"

#include "drbsgt/config.hpp"
#include "drbsgt/error.hpp"
#include "drbsgt/harness.hpp"
#include "drbsgt/selftest.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drbsgt {
namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::string out;
  bool quiet = false;
};

void add_overrides(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--seed", o.seed, "Master seed (overrides master_seed)");
  cmd.add_option("--paths", o.paths, "Number of sample paths")->check(CLI::PositiveNumber);
  cmd.add_option("--out", o.out, "Output directory");
  cmd.add_flag("--quiet", o.quiet, "Only report errors");
}

ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  ExperimentConfig config = load_config(path);
  if (o.seed) config.master_seed = *o.seed;
  if (o.paths) config.paths = *o.paths;
  validate_config(config);
  return config;
}

int report_run(const RunResult& r, const std::filesystem::path& dir, bool quiet,
               std::ostream& out, std::ostream& err) {
  if (!quiet) {
    fmt::print(out, "{}: {} paths x {} iterations in {:.2f} s, rho_W = {:.6g}\n",
               to_string(r.config.algorithm), r.paths.size(), r.horizon, r.wall_seconds, r.rho);
    if (!r.aggregate.empty()) {
      const AggregateRow& last = r.aggregate.back();
      fmt::print(out, "final objective {:.10g}, err1 {:.4g}, err2 {:.4g}\n",
                 last.objective.mean, last.err1.mean, last.err2.mean);
    }
    fmt::print(out, "outputs in {}\n", dir.string());
  }
  for (const PathFailure& f : r.failures) {
    fmt::print(err, "path {} diverged at iteration {} (agent {})\n", f.path, f.iteration,
               f.agent);
  }
  if (!r.schedule.passes()) fmt::print(err, "warning: stepsize schedule fails validation\n");
  if (r.monitors.total_violations() > 0) {
    fmt::print(err, "monitor violations: tracking {}, mean dynamics {}, consensus {}\n",
               r.monitors.tracking_violations, r.monitors.mean_dynamics_violations,
               r.monitors.consensus_violations);
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized randomized block stochastic gradient tracking simulator",
               "drbsgt"};
  app.require_subcommand(1);

  Overrides run_opts;
  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  add_overrides(*run, run_opts);

  Overrides cmp_opts;
  std::vector<std::string> cmp_configs;
  std::uint64_t budget = 0;
  CLI::App* compare = app.add_subcommand("compare", "Compare algorithms at equal block budget");
  compare->add_option("--config", cmp_configs, "Experiment configs, one per algorithm")
      ->required();
  compare->add_option("--budget", budget, "Block-evaluation budget")
      ->required()
      ->check(CLI::PositiveNumber);
  add_overrides(*compare, cmp_opts);

  Overrides val_opts;
  std::string val_config;
  bool strict = false;
  CLI::App* validate = app.add_subcommand("validate", "Check the stepsize schedule");
  validate->add_option("--config", val_config, "Experiment config (JSON)")->required();
  validate->add_flag("--strict", strict, "Exit 1 when the schedule fails a condition");
  add_overrides(*validate, val_opts);

  Overrides self_opts;
  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in identity checks");
  add_overrides(*selftest, self_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    fmt::print(out, "{}", app.help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    fmt::print(out, "{}", app.help("", CLI::AppFormatMode::All));
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kExitUsage;
  }

  try {
    if (*run) {
      ExperimentConfig config = load_with(run_config, run_opts);
      if (!run_opts.out.empty()) config.output_dir = run_opts.out;
      if (config.output_dir.empty()) config.output_dir = "out";
      const RunResult result = run_experiment(config);
      return report_run(result, config.output_dir, run_opts.quiet, out, err);
    }
    if (*compare) {
      std::vector<ExperimentConfig> configs;
      for (const std::string& path : cmp_configs) configs.push_back(load_with(path, cmp_opts));
      const std::string dir = cmp_opts.out.empty() ? "out" : cmp_opts.out;
      const ComparisonTable table = compare_algorithms(configs, budget);
      write_comparison(table, dir);
      if (!cmp_opts.quiet) {
        for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
          const ComparisonCell& c = table.cells[a].back();
          fmt::print(out, "{}: objective {:.10g} [{:.10g}, {:.10g}] at {} block evaluations\n",
                     to_string(table.algorithms[a]), c.objective.mean, c.objective.lo,
                     c.objective.hi, table.budgets.back());
        }
        fmt::print(out, "outputs in {}\n", dir);
      }
      return kExitOk;
    }
    if (*validate) {
      const ExperimentConfig config = load_with(val_config, val_opts);
      const ScheduleReport report = schedule_report(config);
      if (!val_opts.quiet) fmt::print(out, "{}", report.to_text());
      return report.passes() || !strict ? kExitOk : kExitUsage;
    }
    if (*selftest) {
      const auto cases = run_selftest(self_opts.seed.value_or(1));
      bool ok = true;
      for (const SelftestCase& c : cases) {
        ok = ok && c.passed;
        if (!self_opts.quiet || !c.passed) {
          fmt::print(out, "{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        }
      }
      return ok ? kExitOk : kExitRuntime;
    }
  } catch (const ConfigError& e) {
    fmt::print(err, "config error [{}]: {}\n", e.key(), e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace drbsgt
