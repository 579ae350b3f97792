#pragma once

#include "drbsgt/algorithms.hpp"
#include "drbsgt/dataset.hpp"
#include "drbsgt/network.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace drbsgt {

enum class ObjectiveKind { kQuadratic, kLogistic };
enum class DatasetSource { kSynthetic, kCsv };

/// One experiment. Keys of the JSON file match the member names; see
/// docs/config.md.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kDrbsgt;

  GraphKind graph = GraphKind::kRing;
  std::string edge_file;
  std::size_t m = 5;
  WeightRule weight_rule = WeightRule::kMetropolis;

  ObjectiveKind objective = ObjectiveKind::kQuadratic;
  std::size_t n = 20;
  std::size_t b = 4;

  // quadratic
  double quadratic_mu = 1.0;
  double quadratic_lip = 2.0;
  double noise = 0.1;  // ν
  double center_scale = 1.0;

  // logistic
  DatasetSource dataset = DatasetSource::kSynthetic;
  std::string dataset_path;
  std::size_t samples = 1000;
  double feature_mean = 5.0;
  double feature_std = 0.5;
  double flip_rate = 0.05;
  LabelRule label_rule = LabelRule::kParity;
  long positive_class = 0;
  bool scale_features = false;
  ShardRule shard_rule = ShardRule::kContiguous;
  double mu = 0.1;         // regularization
  std::size_t batch = 100;  // ε

  double gamma = 10.0;
  double Gamma = 1e4;
  std::size_t horizon = 1000;  // iterations K
  std::uint64_t budget = 0;    // block evaluations; overrides horizon when positive

  std::size_t paths = 5;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  InitialPoint x0 = InitialPoint::kGaussian;
  std::size_t dense_until = 1000;
  std::size_t points_per_decade = 100;
  bool monitors = true;
  std::string output_dir;
};

/// Throws ConfigError naming the key for unknown keys, wrongly typed values
/// and values outside their domain.
ExperimentConfig parse_config(std::string_view json_text);

/// Throws ConfigError (key "config") carrying the path when the file is
/// missing or unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks: b ≤ n, positives positive, edge file present when
/// needed, a horizon or budget set.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON; parse_config(to_json(c)) reproduces c.
std::string to_json(const ExperimentConfig& config);

/// Canonical description of everything that defines the problem instance
/// (graph, weights, objective, partition, seed). Configs with equal keys
/// share x*, W and the oracle.
std::string problem_key(const ExperimentConfig& config);

/// Iterations K that fit into config.budget block evaluations, counting the
/// initial gradient evaluations; config.horizon when no budget is set.
std::size_t effective_horizon(const ExperimentConfig& config);

Algorithm parse_algorithm(std::string_view name);

}  // namespace drbsgt
