#include "drbsgt/dataset.hpp"

#include "drbsgt/error.hpp"
#include "drbsgt/random.hpp"

#include <fmt/format.h>
#include <zlib.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace drbsgt {
namespace {

std::string read_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw DataError("cannot open " + path.string());
  std::string content;
  char buffer[1 << 16];
  int got = 0;
  while ((got = gzread(file, buffer, sizeof(buffer))) > 0) {
    content.append(buffer, static_cast<std::size_t>(got));
  }
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw DataError("gzip stream is corrupt: " + path.string());
  return content;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view token, std::size_t line) {
  token = trim(token);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(fmt::format("line {}: '{}' is not a number", line, token), line);
  }
  return value;
}

double map_label(double raw, const LabelMapping& mapping, std::size_t line) {
  const double rounded = std::round(raw);
  switch (mapping.rule) {
    case LabelRule::kSign:
      if (raw == 1.0 || raw == -1.0) return raw;
      break;
    case LabelRule::kParity:
      if (rounded == raw) {
        return static_cast<long>(rounded) % 2 == 0 ? 1.0 : -1.0;
      }
      break;
    case LabelRule::kOneVsRest:
      if (rounded == raw) {
        return static_cast<long>(rounded) == mapping.positive_class ? 1.0 : -1.0;
      }
      break;
  }
  throw DataError(fmt::format("line {}: label {} cannot be mapped to {{-1,+1}}", line, raw));
}

}  // namespace

Dataset generate_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.samples < 1 || spec.dim < 1) {
    throw ArgumentError("synthetic dataset needs s >= 1 and n >= 1");
  }
  if (!(spec.stddev >= 0.0) || !(spec.flip_rate >= 0.0 && spec.flip_rate <= 1.0)) {
    throw ArgumentError("synthetic dataset needs stddev >= 0 and flip rate in [0,1]");
  }
  Rng rng = make_stream(spec.seed, 0, 0, StreamPurpose::kDataset);
  std::normal_distribution<double> feature(spec.mean, spec.stddev);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution flip(spec.flip_rate);

  const auto s = static_cast<Eigen::Index>(spec.samples);
  const auto n = static_cast<Eigen::Index>(spec.dim);
  Vector hyperplane(n);
  for (Eigen::Index c = 0; c < n; ++c) hyperplane(c) = unit(rng);

  Dataset data;
  data.features.resize(s, n);
  data.labels.resize(spec.samples);
  for (Eigen::Index r = 0; r < s; ++r) {
    double score = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double u = feature(rng);
      data.features(r, c) = u;
      score += (u - spec.mean) * hyperplane(c);
    }
    double label = score >= 0.0 ? 1.0 : -1.0;
    if (flip(rng)) label = -label;
    data.labels[static_cast<std::size_t>(r)] = label;
  }
  return data;
}

Dataset parse_dataset(std::istream& in, const LoadOptions& options) {
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = row.find(',', start);
      const std::string_view token =
          row.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                            : comma - start);
      const double v = parse_number(token, line_no);
      if (fields == 0) {
        labels.push_back(map_label(v, options.labels, line_no));
      } else {
        values.push_back(v);
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields < 2) {
      throw ParseError(fmt::format("line {}: expected a label and at least one feature",
                                   line_no),
                       line_no);
    }
    if (dim == 0) {
      dim = fields - 1;
    } else if (fields - 1 != dim) {
      throw ParseError(fmt::format("line {}: expected {} features, found {}", line_no, dim,
                                   fields - 1),
                       line_no);
    }
  }
  if (labels.empty()) throw DataError("dataset is empty");

  Dataset data;
  data.labels = std::move(labels);
  data.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(data.labels.size()),
                                     static_cast<Eigen::Index>(dim));
  if (options.scale_unit) {
    const double peak = data.features.cwiseAbs().maxCoeff();
    if (peak > 0.0) data.features /= peak;
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) {
    throw DataError("dataset file not found: " + path.string());
  }
  if (path.extension() == ".gz") {
    std::istringstream in(read_gzip(path));
    return parse_dataset(in, options);
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_dataset(in, options);
}

Dataset partition_dataset(Dataset data, std::size_t num_agents, ShardRule rule) {
  const std::size_t s = data.num_samples();
  if (num_agents < 1 || num_agents > s) {
    throw ArgumentError(fmt::format("cannot split {} samples across {} agents", s, num_agents));
  }
  data.shards.assign(num_agents, {});
  switch (rule) {
    case ShardRule::kContiguous: {
      const std::size_t base = s / num_agents;
      const std::size_t larger = s % num_agents;
      std::size_t next = 0;
      for (std::size_t i = 0; i < num_agents; ++i) {
        const std::size_t size = base + (i < larger ? 1 : 0);
        for (std::size_t k = 0; k < size; ++k) data.shards[i].push_back(next++);
      }
      break;
    }
    case ShardRule::kRoundRobin:
      for (std::size_t j = 0; j < s; ++j) data.shards[j % num_agents].push_back(j);
      break;
  }
  return data;
}

}  // namespace drbsgt
