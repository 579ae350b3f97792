#include "drbsgt/network.hpp"

#include "drbsgt/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>

namespace drbsgt {
namespace {

constexpr double kStochasticTolerance = 1e-12;

Edge normalized(Edge e) {
  if (e.first > e.second) std::swap(e.first, e.second);
  return e;
}

bool connected(std::size_t m, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<bool> seen(m, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == m;
}

}  // namespace

NetworkGraph::NetworkGraph(std::size_t num_agents, std::span<const Edge> edges)
    : num_agents_(num_agents), adjacency_(num_agents) {
  if (num_agents < 2) {
    throw ArgumentError("a network needs at least 2 agents");
  }
  std::set<Edge> unique;
  for (const Edge& e : edges) {
    if (e.first >= num_agents || e.second >= num_agents) {
      throw TopologyError("edge (" + std::to_string(e.first) + "," +
                          std::to_string(e.second) + ") references an agent >= " +
                          std::to_string(num_agents));
    }
    if (e.first == e.second) {
      throw TopologyError("self-loop on agent " + std::to_string(e.first));
    }
    unique.insert(normalized(e));
  }
  edges_.assign(unique.begin(), unique.end());
  for (const auto& [i, j] : edges_) {
    adjacency_[i].push_back(j);
    adjacency_[j].push_back(i);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
  if (!connected(num_agents_, adjacency_)) {
    throw TopologyError("graph is not connected: agent 0 does not reach all " +
                        std::to_string(num_agents_) + " agents");
  }
}

bool NetworkGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i >= num_agents_ || j >= num_agents_ || i == j) return false;
  return std::binary_search(edges_.begin(), edges_.end(), normalized({i, j}));
}

bool NetworkGraph::is_regular() const {
  const std::size_t d = degree(0);
  for (std::size_t i = 1; i < num_agents_; ++i) {
    if (degree(i) != d) return false;
  }
  return true;
}

NetworkGraph build_graph(GraphKind kind, std::size_t num_agents,
                         std::span<const Edge> edges) {
  if (num_agents < 2) {
    throw ArgumentError("a network needs at least 2 agents, got " +
                        std::to_string(num_agents));
  }
  std::vector<Edge> list;
  switch (kind) {
    case GraphKind::kRing:
      for (std::size_t i = 0; i < num_agents; ++i) {
        list.emplace_back(i, (i + 1) % num_agents);
      }
      break;
    case GraphKind::kComplete:
      for (std::size_t i = 0; i < num_agents; ++i) {
        for (std::size_t j = i + 1; j < num_agents; ++j) list.emplace_back(i, j);
      }
      break;
    case GraphKind::kEdgeList:
      list.assign(edges.begin(), edges.end());
      break;
  }
  return NetworkGraph(num_agents, list);
}

std::vector<Edge> parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    long long i = 0;
    long long j = 0;
    if (!(fields >> i)) {
      fields.clear();
      std::string rest;
      if (fields >> rest) {
        throw ParseError("edge list line " + std::to_string(line_no) +
                             ": expected two agent indices",
                         line_no);
      }
      continue;  // blank or comment-only
    }
    std::string trailing;
    if (!(fields >> j) || (fields >> trailing) || i < 0 || j < 0) {
      throw ParseError("edge list line " + std::to_string(line_no) +
                           ": expected two non-negative agent indices",
                       line_no);
    }
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return edges;
}

std::vector<Edge> read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open edge list " + path.string());
  return parse_edge_list(in);
}

MixingMatrix::MixingMatrix(const NetworkGraph& graph, Matrix weights,
                           PowerIterationOptions options)
    : weights_(std::move(weights)), rho_(0.0) {
  const auto m = static_cast<Eigen::Index>(graph.num_agents());
  if (weights_.rows() != m || weights_.cols() != m) {
    throw InvariantError("mixing matrix must be " + std::to_string(m) + "x" +
                         std::to_string(m));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(weights_.row(i).sum() - 1.0) > kStochasticTolerance) {
      throw InvariantError("row " + std::to_string(i) + " does not sum to 1");
    }
    if (std::abs(weights_.col(i).sum() - 1.0) > kStochasticTolerance) {
      throw InvariantError("column " + std::to_string(i) + " does not sum to 1");
    }
    if (!(weights_(i, i) > 0.0)) {
      throw InvariantError("diagonal weight of agent " + std::to_string(i) +
                           " is not positive");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i != j && weights_(i, j) != 0.0 &&
          !graph.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        throw InvariantError("weight on non-edge (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
    }
  }
  rho_ = spectral_gap(weights_, options);
  if (!(rho_ < 1.0 - 1e-12)) {
    throw InvariantError("rho_W = " + std::to_string(rho_) +
                         " is not below 1; W does not contract disagreement");
  }
  support_.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (weights_(i, j) != 0.0) {
        support_[static_cast<std::size_t>(i)].emplace_back(j, weights_(i, j));
      }
    }
  }
}

void MixingMatrix::mix(const Matrix& in, Matrix& out) const {
  out.resize(in.rows(), in.cols());
  for (std::size_t i = 0; i < support_.size(); ++i) {
    auto row = out.row(static_cast<Eigen::Index>(i));
    row.setZero();
    for (const auto& [j, w] : support_[i]) {
      row.noalias() += w * in.row(static_cast<Eigen::Index>(j));
    }
  }
}

double MixingMatrix::distance_from_identity() const {
  const Matrix diff = weights_ - Matrix::Identity(weights_.rows(), weights_.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);
  return svd.singularValues()(0);
}

MixingMatrix build_mixing_matrix(const NetworkGraph& graph, WeightRule rule) {
  const std::size_t m = graph.num_agents();
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  switch (rule) {
    case WeightRule::kMetropolis:
      for (const auto& [i, j] : graph.edges()) {
        const double weight =
            1.0 / (1.0 + static_cast<double>(std::max(graph.degree(i), graph.degree(j))));
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weight;
        w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = weight;
      }
      for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        w(ii, ii) = 1.0 - (w.row(ii).sum() - w(ii, ii));
      }
      break;
    case WeightRule::kLazyUniform: {
      if (!graph.is_regular()) {
        throw RuleError("lazy-uniform weights need a regular graph");
      }
      const double share = 0.5 / static_cast<double>(graph.degree(0) + 1);
      for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        w(ii, ii) = 0.5 + share;
        for (std::size_t j : graph.neighbors(i)) {
          w(ii, static_cast<Eigen::Index>(j)) = share;
        }
      }
      break;
    }
  }
  return MixingMatrix(graph, std::move(w));
}

double spectral_gap(const Matrix& weights, PowerIterationOptions options) {
  const Eigen::Index m = weights.rows();
  if (m == 0 || weights.cols() != m) {
    throw ArgumentError("spectral_gap needs a non-empty square matrix");
  }
  const Eigen::MatrixXd deflated =
      weights - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
  // ‖M‖₂ ≤ ‖M‖_F, so a numerically zero deflated matrix is reported as its
  // Frobenius norm.
  const double frobenius = deflated.norm();
  if (frobenius <= 1e-13) return frobenius;

  const Eigen::MatrixXd gram = deflated.transpose() * deflated;
  // Deterministic start vector with components along every eigendirection.
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    v(i) = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3) +
           0.01 * static_cast<double>(i);
  }
  v.normalize();
  double estimate = 0.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd next = gram * v;
    const double lambda = v.dot(next);
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    if (it > 0 && std::abs(sigma - estimate) <= options.tolerance * std::max(sigma, 1e-300)) {
      // One extra Rayleigh quotient on the normalized iterate.
      return std::sqrt(std::max(next.dot(gram * next), 0.0));
    }
    estimate = sigma;
    v = std::move(next);
  }
  throw NumericalError("power iteration did not converge in " +
                           std::to_string(options.max_iterations) + " steps",
                       estimate);
}

}  // namespace drbsgt
