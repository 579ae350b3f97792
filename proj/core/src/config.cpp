#include "drbsgt/config.hpp"

#include "drbsgt/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace drbsgt {
namespace {

using nlohmann::json;

template <typename Enum>
using NameTable = std::initializer_list<std::pair<std::string_view, Enum>>;

const NameTable<Algorithm> kAlgorithms = {
    {"drbsgt", Algorithm::kDrbsgt}, {"dsgt", Algorithm::kDsgt}, {"atc", Algorithm::kAtc}};
const NameTable<GraphKind> kGraphs = {
    {"ring", GraphKind::kRing}, {"complete", GraphKind::kComplete},
    {"edge_list", GraphKind::kEdgeList}};
const NameTable<WeightRule> kWeightRules = {{"metropolis", WeightRule::kMetropolis},
                                            {"lazy_uniform", WeightRule::kLazyUniform}};
const NameTable<ObjectiveKind> kObjectives = {{"quadratic", ObjectiveKind::kQuadratic},
                                              {"logistic", ObjectiveKind::kLogistic}};
const NameTable<DatasetSource> kSources = {{"synthetic", DatasetSource::kSynthetic},
                                           {"csv", DatasetSource::kCsv}};
const NameTable<LabelRule> kLabelRules = {{"sign", LabelRule::kSign},
                                          {"parity", LabelRule::kParity},
                                          {"one_vs_rest", LabelRule::kOneVsRest}};
const NameTable<ShardRule> kShardRules = {{"contiguous", ShardRule::kContiguous},
                                          {"round_robin", ShardRule::kRoundRobin}};
const NameTable<InitialPoint> kInitialPoints = {{"zeros", InitialPoint::kZeros},
                                                {"gaussian", InitialPoint::kGaussian}};

template <typename Enum>
std::string_view name_of(const NameTable<Enum>& table, Enum value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Enum>
Enum enum_of(const NameTable<Enum>& table, std::string_view key, std::string_view text) {
  std::string allowed;
  for (const auto& [name, v] : table) {
    if (name == text) return v;
    allowed += allowed.empty() ? "" : ", ";
    allowed += name;
  }
  throw ConfigError(fmt::format("{}: '{}' is not one of {}", key, text, allowed),
                    std::string(key));
}

class Reader {
 public:
  Reader(const json& doc, ExperimentConfig& config) : doc_(doc), config_(config) {}

  void read_all();

 private:
  const json& value(std::string_view key) const { return doc_.at(std::string(key)); }

  [[noreturn]] void fail(std::string_view key, std::string_view expected) const {
    throw ConfigError(
        fmt::format("{}: expected {}, got {}", key, expected, value(key).dump()),
        std::string(key));
  }

  void real(std::string_view key, double& out) const {
    if (!value(key).is_number()) fail(key, "a number");
    out = value(key).get<double>();
    if (!std::isfinite(out)) fail(key, "a finite number");
  }

  template <typename Int>
  void integer(std::string_view key, Int& out) const {
    const json& v = value(key);
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
    } else if (v.is_number_float() && v.get<double>() >= 0.0 &&
               v.get<double>() == std::floor(v.get<double>()) && v.get<double>() < 1.8e19) {
      out = static_cast<Int>(v.get<double>());  // permits 1e5 style literals
    } else {
      fail(key, "a non-negative integer");
    }
  }

  void signed_integer(std::string_view key, long& out) const {
    if (!value(key).is_number_integer()) fail(key, "an integer");
    out = value(key).get<long>();
  }

  void boolean(std::string_view key, bool& out) const {
    if (!value(key).is_boolean()) fail(key, "true or false");
    out = value(key).get<bool>();
  }

  void text(std::string_view key, std::string& out) const {
    if (!value(key).is_string()) fail(key, "a string");
    out = value(key).get<std::string>();
  }

  template <typename Enum>
  void choice(std::string_view key, const NameTable<Enum>& table, Enum& out) const {
    if (!value(key).is_string()) fail(key, "a string");
    out = enum_of(table, key, value(key).get<std::string>());
  }

  const json& doc_;
  ExperimentConfig& config_;
};

void Reader::read_all() {
  for (const auto& [key, unused] : doc_.items()) {
    ExperimentConfig& c = config_;
    if (key == "algorithm") choice(key, kAlgorithms, c.algorithm);
    else if (key == "graph") choice(key, kGraphs, c.graph);
    else if (key == "edge_file") text(key, c.edge_file);
    else if (key == "m") integer(key, c.m);
    else if (key == "weight_rule") choice(key, kWeightRules, c.weight_rule);
    else if (key == "objective") choice(key, kObjectives, c.objective);
    else if (key == "n") integer(key, c.n);
    else if (key == "b") integer(key, c.b);
    else if (key == "quadratic_mu") real(key, c.quadratic_mu);
    else if (key == "quadratic_lip") real(key, c.quadratic_lip);
    else if (key == "noise") real(key, c.noise);
    else if (key == "center_scale") real(key, c.center_scale);
    else if (key == "dataset") choice(key, kSources, c.dataset);
    else if (key == "dataset_path") text(key, c.dataset_path);
    else if (key == "samples") integer(key, c.samples);
    else if (key == "feature_mean") real(key, c.feature_mean);
    else if (key == "feature_std") real(key, c.feature_std);
    else if (key == "flip_rate") real(key, c.flip_rate);
    else if (key == "label_rule") choice(key, kLabelRules, c.label_rule);
    else if (key == "positive_class") signed_integer(key, c.positive_class);
    else if (key == "scale_features") boolean(key, c.scale_features);
    else if (key == "shard_rule") choice(key, kShardRules, c.shard_rule);
    else if (key == "mu") real(key, c.mu);
    else if (key == "batch") integer(key, c.batch);
    else if (key == "gamma") real(key, c.gamma);
    else if (key == "Gamma") real(key, c.Gamma);
    else if (key == "horizon") integer(key, c.horizon);
    else if (key == "budget") integer(key, c.budget);
    else if (key == "paths") integer(key, c.paths);
    else if (key == "master_seed") integer(key, c.master_seed);
    else if (key == "workers") integer(key, c.workers);
    else if (key == "x0") choice(key, kInitialPoints, c.x0);
    else if (key == "dense_until") integer(key, c.dense_until);
    else if (key == "points_per_decade") integer(key, c.points_per_decade);
    else if (key == "monitors") boolean(key, c.monitors);
    else if (key == "output_dir") text(key, c.output_dir);
    else throw ConfigError(fmt::format("unknown key '{}'", key), key);
  }
}

void require(bool ok, std::string_view key, std::string_view message) {
  if (!ok) throw ConfigError(fmt::format("{}: {}", key, message), std::string(key));
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  return enum_of(kAlgorithms, "algorithm", name);
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.what()), "config");
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "config");
  ExperimentConfig config;
  Reader(doc, config).read_all();
  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config file {}", path.string()), "config");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config = parse_config(buffer.str());
  // Relative data paths are resolved against the config's directory.
  const auto base = path.parent_path();
  if (!config.edge_file.empty() && std::filesystem::path(config.edge_file).is_relative()) {
    config.edge_file = (base / config.edge_file).string();
  }
  if (!config.dataset_path.empty() &&
      std::filesystem::path(config.dataset_path).is_relative()) {
    config.dataset_path = (base / config.dataset_path).string();
  }
  return config;
}

void validate_config(const ExperimentConfig& c) {
  require(c.m >= 2, "m", "need at least two agents");
  require(c.n >= 1, "n", "must be positive");
  require(c.b >= 1 && c.b <= c.n, "b", "must satisfy 1 <= b <= n");
  require(c.graph != GraphKind::kEdgeList || !c.edge_file.empty(), "edge_file",
          "required when graph is edge_list");
  require(c.gamma > 0.0, "gamma", "must be positive");
  require(c.Gamma > 0.0, "Gamma", "must be positive");
  require(c.horizon > 0 || c.budget > 0, "horizon", "set a positive horizon or budget");
  require(c.paths >= 1, "paths", "must be positive");
  require(c.workers >= 1, "workers", "must be positive");
  if (c.objective == ObjectiveKind::kQuadratic) {
    require(c.quadratic_mu > 0.0, "quadratic_mu", "must be positive");
    require(c.quadratic_lip >= c.quadratic_mu, "quadratic_lip", "must be >= quadratic_mu");
    require(c.noise >= 0.0, "noise", "must be non-negative");
    require(c.center_scale >= 0.0, "center_scale", "must be non-negative");
  } else {
    require(c.mu > 0.0, "mu", "must be positive");
    require(c.batch >= 1, "batch", "must be positive");
    require(c.dataset != DatasetSource::kCsv || !c.dataset_path.empty(), "dataset_path",
            "required when dataset is csv");
    if (c.dataset == DatasetSource::kSynthetic) {
      require(c.samples >= c.m, "samples", "need at least one sample per agent");
      require(c.feature_std > 0.0, "feature_std", "must be positive");
      require(c.flip_rate >= 0.0 && c.flip_rate <= 1.0, "flip_rate", "must lie in [0, 1]");
    }
  }
}

std::string to_json(const ExperimentConfig& c) {
  json doc = json::object();
  doc["algorithm"] = name_of(kAlgorithms, c.algorithm);
  doc["graph"] = name_of(kGraphs, c.graph);
  doc["edge_file"] = c.edge_file;
  doc["m"] = c.m;
  doc["weight_rule"] = name_of(kWeightRules, c.weight_rule);
  doc["objective"] = name_of(kObjectives, c.objective);
  doc["n"] = c.n;
  doc["b"] = c.b;
  doc["quadratic_mu"] = c.quadratic_mu;
  doc["quadratic_lip"] = c.quadratic_lip;
  doc["noise"] = c.noise;
  doc["center_scale"] = c.center_scale;
  doc["dataset"] = name_of(kSources, c.dataset);
  doc["dataset_path"] = c.dataset_path;
  doc["samples"] = c.samples;
  doc["feature_mean"] = c.feature_mean;
  doc["feature_std"] = c.feature_std;
  doc["flip_rate"] = c.flip_rate;
  doc["label_rule"] = name_of(kLabelRules, c.label_rule);
  doc["positive_class"] = c.positive_class;
  doc["scale_features"] = c.scale_features;
  doc["shard_rule"] = name_of(kShardRules, c.shard_rule);
  doc["mu"] = c.mu;
  doc["batch"] = c.batch;
  doc["gamma"] = c.gamma;
  doc["Gamma"] = c.Gamma;
  doc["horizon"] = c.horizon;
  doc["budget"] = c.budget;
  doc["paths"] = c.paths;
  doc["master_seed"] = c.master_seed;
  doc["workers"] = c.workers;
  doc["x0"] = name_of(kInitialPoints, c.x0);
  doc["dense_until"] = c.dense_until;
  doc["points_per_decade"] = c.points_per_decade;
  doc["monitors"] = c.monitors;
  doc["output_dir"] = c.output_dir;
  return doc.dump(2);
}

std::string problem_key(const ExperimentConfig& c) {
  std::string key = fmt::format("graph={} edges={} m={} weights={} n={} b={} seed={}",
                                name_of(kGraphs, c.graph), c.edge_file, c.m,
                                name_of(kWeightRules, c.weight_rule), c.n, c.b, c.master_seed);
  if (c.objective == ObjectiveKind::kQuadratic) {
    key += fmt::format(" quadratic mu={:.17g} lip={:.17g} noise={:.17g} scale={:.17g}",
                       c.quadratic_mu, c.quadratic_lip, c.noise, c.center_scale);
  } else {
    key += fmt::format(" logistic source={} reg={:.17g} batch={} shards={}",
                       name_of(kSources, c.dataset), c.mu, c.batch,
                       name_of(kShardRules, c.shard_rule));
    if (c.dataset == DatasetSource::kSynthetic) {
      key += fmt::format(" samples={} mean={:.17g} std={:.17g} flip={:.17g}", c.samples,
                         c.feature_mean, c.feature_std, c.flip_rate);
    } else {
      key += fmt::format(" path={} labels={} positive={} scale={}", c.dataset_path,
                         name_of(kLabelRules, c.label_rule), c.positive_class,
                         c.scale_features);
    }
  }
  return key;
}

std::size_t effective_horizon(const ExperimentConfig& c) {
  if (c.budget == 0) return c.horizon;
  const std::uint64_t m = c.m;
  std::uint64_t per_step = m;
  std::uint64_t initial = m;
  switch (c.algorithm) {
    case Algorithm::kDrbsgt:
      break;
    case Algorithm::kDsgt:
      per_step = m * c.b;
      initial = m * c.b;
      break;
    case Algorithm::kAtc:
      initial = 0;
      break;
  }
  if (c.budget < initial + per_step) return 0;
  return static_cast<std::size_t>((c.budget - initial) / per_step);
}

}  // namespace drbsgt
