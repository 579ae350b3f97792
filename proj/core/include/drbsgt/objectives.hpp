#pragma once

#include "drbsgt/blocks.hpp"
#include "drbsgt/dataset.hpp"
#include "drbsgt/linalg.hpp"
#include "drbsgt/random.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace drbsgt {

/// Constants shared by all local objectives: each f_i is `mu`-strongly convex
/// and `lip`-smooth; `noise_bound` is ν² (variance proxy of the stochastic
/// gradient), injected or estimated.
struct ObjectiveConstants {
  double mu = 0.0;
  double lip = 0.0;
  double noise_bound = 0.0;
};

/// Per-agent oracle for f_i, ∇f_i and block stochastic gradients.
///
/// Implementations are immutable after construction; every stochastic call
/// takes the caller's random stream, so concurrent sample paths never share
/// state through the oracle.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t num_agents() const = 0;
  virtual std::size_t dim() const = 0;

  virtual double value(std::size_t agent, std::span<const double> x) const = 0;
  virtual void gradient(std::size_t agent, std::span<const double> x,
                        std::span<double> out) const = 0;

  /// Exact ∇^(ℓ) f_i(x) on one block; `out` has `range.size` entries.
  virtual void block_gradient(std::size_t agent, std::span<const double> x,
                              BlockRange range, std::span<double> out) const;

  /// Draws ξ from `rng` and writes the `range` coordinates of ∇f_i(x, ξ).
  /// With range = [0, n) this is the full stochastic gradient; the random
  /// draws consumed do not depend on the range.
  virtual void stochastic_block_gradient(std::size_t agent, std::span<const double> x,
                                         BlockRange range, Rng& rng,
                                         std::span<double> out) const = 0;

  void stochastic_gradient(std::size_t agent, std::span<const double> x, Rng& rng,
                           std::span<double> out) const {
    stochastic_block_gradient(agent, x, {0, dim()}, rng, out);
  }

  /// f(x) = Σ_i f_i(x).
  double total_value(std::span<const double> x) const;
  void total_gradient(std::span<const double> x, std::span<double> out) const;

  /// Smoothness constant of Σ_i f_i; defaults to m·lip.
  virtual double total_lipschitz() const;

  /// x* when it is available in closed form.
  virtual std::optional<Vector> closed_form_optimum() const { return std::nullopt; }

  virtual std::string describe() const = 0;

  const ObjectiveConstants& constants() const { return constants_; }
  void set_noise_bound(double nu_squared) { constants_.noise_bound = nu_squared; }

 protected:
  ObjectiveConstants constants_;
};

/// f_i(x) = ½(x − c_i)ᵀ A_i (x − c_i); the stochastic gradient adds Gaussian
/// noise with per-coordinate variance ν²/n (total variance ν²).
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<Matrix> hessians, std::vector<Vector> centers,
                     double noise);

  std::size_t num_agents() const override { return hessians_.size(); }
  std::size_t dim() const override { return dim_; }
  double value(std::size_t agent, std::span<const double> x) const override;
  void gradient(std::size_t agent, std::span<const double> x,
                std::span<double> out) const override;
  void block_gradient(std::size_t agent, std::span<const double> x, BlockRange range,
                      std::span<double> out) const override;
  void stochastic_block_gradient(std::size_t agent, std::span<const double> x,
                                 BlockRange range, Rng& rng,
                                 std::span<double> out) const override;
  double total_lipschitz() const override { return total_lip_; }
  std::optional<Vector> closed_form_optimum() const override { return optimum_; }
  std::string describe() const override;

  const Matrix& hessian(std::size_t agent) const { return hessians_.at(agent); }
  const Vector& center(std::size_t agent) const { return centers_.at(agent); }
  double noise() const { return noise_; }

 private:
  std::size_t dim_;
  std::vector<Matrix> hessians_;
  std::vector<Vector> centers_;
  double noise_;
  double total_lip_ = 0.0;
  Vector optimum_;
};

struct QuadraticSpec {
  std::size_t agents = 5;
  std::size_t dim = 20;
  double mu = 1.0;    // smallest eigenvalue of every A_i
  double lip = 2.0;   // largest eigenvalue of every A_i
  double noise = 0.0;  // ν
  double center_scale = 1.0;
  std::uint64_t seed = 1;
};

/// A_i = Q_i diag(λ) Q_iᵀ with Haar-ish random rotations Q_i and λ evenly
/// spaced on [mu, lip]; c_i ~ N(0, center_scale²).
std::shared_ptr<QuadraticObjective> make_quadratic_objective(const QuadraticSpec& spec);

/// Regularized logistic loss on one shard:
///   f_i(x) = (1/|S|) Σ_{j∈S_i} ln(1 + exp(−v_j u_jᵀx)) + (μ/2m)‖x‖².
/// Mini-batches draw ε indices from S_i uniformly with replacement.
class LogisticObjective final : public Objective {
 public:
  static constexpr std::size_t kDefaultBatchCap = std::size_t{1} << 20;

  LogisticObjective(std::shared_ptr<const Dataset> data, double regularization,
                    std::size_t batch, std::size_t batch_cap = kDefaultBatchCap);

  std::size_t num_agents() const override { return data_->shards.size(); }
  std::size_t dim() const override { return data_->dim(); }
  double value(std::size_t agent, std::span<const double> x) const override;
  void gradient(std::size_t agent, std::span<const double> x,
                std::span<double> out) const override;
  void block_gradient(std::size_t agent, std::span<const double> x, BlockRange range,
                      std::span<double> out) const override;
  void stochastic_block_gradient(std::size_t agent, std::span<const double> x,
                                 BlockRange range, Rng& rng,
                                 std::span<double> out) const override;
  double total_lipschitz() const override { return total_lip_; }
  std::string describe() const override;

  const Dataset& data() const { return *data_; }
  std::size_t batch() const { return batch_; }
  double regularization() const { return regularization_; }

 private:
  std::shared_ptr<const Dataset> data_;
  double regularization_;
  std::size_t batch_;
  double total_lip_ = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-8;  // on ‖Σ∇f_i‖ / max(1, ‖x‖)
  std::size_t max_iterations = 500'000;
};

struct OptimumResult {
  Vector x;
  double residual = 0.0;  // ‖Σ_i ∇f_i(x)‖
  std::size_t iterations = 0;
};

/// Closed form when available, otherwise restarted Nesterov acceleration on
/// Σ_i f_i started from `start` (zero when empty). Throws ConvergenceError on
/// hitting the iteration cap.
OptimumResult solve_optimum(const Objective& objective, const SolverOptions& options = {},
                            const Vector& start = Vector());

/// max over agents and probe points of (1/S) Σ_s ‖∇f_i(x, ξ_s) − ∇f_i(x)‖².
double estimate_noise_bound(const Objective& objective, std::span<const Vector> probes,
                            std::size_t samples, Rng& rng);

}  // namespace drbsgt
