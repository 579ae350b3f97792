#pragma once

#include "drbsgt/linalg.hpp"

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <utility>
#include <vector>

namespace drbsgt {

using Edge = std::pair<std::size_t, std::size_t>;

enum class GraphKind { kRing, kComplete, kEdgeList };

/// Undirected, connected communication topology over agents 0..m-1.
///
/// Edges are stored once with the smaller endpoint first; self-loops are
/// rejected (self-weights belong to the mixing matrix).
class NetworkGraph {
 public:
  NetworkGraph(std::size_t num_agents, std::span<const Edge> edges);

  std::size_t num_agents() const { return num_agents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t agent) const {
    return adjacency_.at(agent);
  }
  std::size_t degree(std::size_t agent) const { return neighbors(agent).size(); }
  bool has_edge(std::size_t i, std::size_t j) const;
  bool is_regular() const;

 private:
  std::size_t num_agents_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

/// Throws ArgumentError when m < 2 and TopologyError when the edge list does
/// not connect every agent.
NetworkGraph build_graph(GraphKind kind, std::size_t num_agents,
                         std::span<const Edge> edges = {});

/// Plain-text edge list: one `i j` pair per line, 0-indexed. Blank lines and
/// `#` comments are skipped. Malformed lines raise ParseError.
std::vector<Edge> parse_edge_list(std::istream& in);
std::vector<Edge> read_edge_list(const std::filesystem::path& path);

enum class WeightRule { kMetropolis, kLazyUniform };

struct PowerIterationOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10'000;
};

/// Doubly stochastic weights W together with the measured ρ_W, the spectral
/// norm of W − (1/m)11ᵀ.
class MixingMatrix {
 public:
  /// Validates every invariant (row/column sums, positive diagonal, support
  /// on the graph, ρ_W < 1) and throws InvariantError on violation.
  MixingMatrix(const NetworkGraph& graph, Matrix weights,
               PowerIterationOptions options = {});

  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  double rho() const { return rho_; }

  /// out = W · in, one row per agent. The accumulation order of every row is
  /// fixed, so identical rows of W give bitwise identical output rows.
  void mix(const Matrix& in, Matrix& out) const;

  /// Spectral norm ‖W − I‖.
  double distance_from_identity() const;

 private:
  Matrix weights_;
  double rho_;
  std::vector<std::vector<std::pair<std::size_t, double>>> support_;
};

MixingMatrix build_mixing_matrix(const NetworkGraph& graph, WeightRule rule);

/// Largest singular value of W − (1/m)11ᵀ by power iteration on the deflated
/// Gram operator. Throws NumericalError (carrying the last estimate) when the
/// iteration cap is hit before the relative change drops below tolerance.
double spectral_gap(const Matrix& weights, PowerIterationOptions options = {});

}  // namespace drbsgt
