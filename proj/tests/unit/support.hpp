#pragma once

#include "drbsgt/linalg.hpp"
#include "drbsgt/network.hpp"
#include "drbsgt/objectives.hpp"
#include "drbsgt/random.hpp"

#include <atomic>
#include <memory>
#include <random>
#include <vector>

namespace drbsgt::testing {

inline Vector gaussian(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = g(rng);
  return v;
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> g;
  Matrix u(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = g(rng);
  return u;
}

/// Spanning tree on a random permutation plus random extra edges.
inline std::vector<Edge> random_connected_edges(std::size_t m, double extra, Rng& rng) {
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    edges.emplace_back(order[pick(rng)], order[i]);
  }
  std::bernoulli_distribution coin(extra);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return edges;
}

/// Largest singular value of W − (1/m)11ᵀ from a dense SVD.
inline double dense_rho(const Matrix& w) {
  const auto m = static_cast<double>(w.rows());
  const Eigen::MatrixXd deflated = w - Eigen::MatrixXd::Constant(w.rows(), w.cols(), 1.0 / m);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(deflated).singularValues()(0);
}

/// Wraps an oracle and counts block-gradient evaluations.
class CountingObjective final : public Objective {
 public:
  explicit CountingObjective(std::shared_ptr<const Objective> inner) : inner_(std::move(inner)) {
    constants_ = inner_->constants();
  }

  std::size_t num_agents() const override { return inner_->num_agents(); }
  std::size_t dim() const override { return inner_->dim(); }
  double value(std::size_t a, std::span<const double> x) const override {
    return inner_->value(a, x);
  }
  void gradient(std::size_t a, std::span<const double> x, std::span<double> out) const override {
    ++full_;
    inner_->gradient(a, x, out);
  }
  void block_gradient(std::size_t a, std::span<const double> x, BlockRange r,
                      std::span<double> out) const override {
    ++blocks_;
    inner_->block_gradient(a, x, r, out);
  }
  void stochastic_block_gradient(std::size_t a, std::span<const double> x, BlockRange r,
                                 Rng& rng, std::span<double> out) const override {
    if (r.size == dim()) {
      ++full_;
    } else {
      ++blocks_;
    }
    inner_->stochastic_block_gradient(a, x, r, rng, out);
  }
  std::string describe() const override { return "counting " + inner_->describe(); }

  std::uint64_t block_calls() const { return blocks_; }
  std::uint64_t full_calls() const { return full_; }

 private:
  std::shared_ptr<const Objective> inner_;
  mutable std::atomic<std::uint64_t> blocks_{0};
  mutable std::atomic<std::uint64_t> full_{0};
};

}  // namespace drbsgt::testing
