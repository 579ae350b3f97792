#include "drbsgt/objectives.hpp"

#include "drbsgt/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drbsgt {
namespace {

// ln(1 + exp(−t)) without overflow.
double softplus_neg(double t) {
  return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

// σ(z) = 1 / (1 + exp(−z)).
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_agent(std::size_t agent, std::size_t num_agents) {
  if (agent >= num_agents) {
    throw ArgumentError(fmt::format("agent {} out of range [0,{})", agent, num_agents));
  }
}

void check_range(BlockRange range, std::size_t dim, std::size_t out_size) {
  if (range.offset + range.size > dim || out_size != range.size) {
    throw ArgumentError(fmt::format("block [{}, {}) does not fit dimension {} / output {}",
                                    range.offset, range.offset + range.size, dim,
                                    out_size));
  }
}

// λ_max(UᵀU) by power iteration on the Gram operator v ↦ Uᵀ(U v).
double gram_top_eigenvalue(const Matrix& u) {
  const Eigen::Index n = u.cols();
  Vector v = Vector::Ones(n).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 10'000; ++it) {
    const Vector uv = u * v;
    Vector next = u.transpose() * uv;
    const double estimate = v.dot(next);
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    if (it > 0 && std::abs(estimate - lambda) <= 1e-10 * estimate) return estimate;
    lambda = estimate;
    v = std::move(next);
  }
  return lambda;
}

}  // namespace

void Objective::block_gradient(std::size_t agent, std::span<const double> x,
                               BlockRange range, std::span<double> out) const {
  check_range(range, dim(), out.size());
  Vector full(static_cast<Eigen::Index>(dim()));
  gradient(agent, x, as_span(full));
  as_vector(out) = full.segment(static_cast<Eigen::Index>(range.offset),
                                static_cast<Eigen::Index>(range.size));
}

double Objective::total_value(std::span<const double> x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < num_agents(); ++i) sum += value(i, x);
  return sum;
}

void Objective::total_gradient(std::span<const double> x, std::span<double> out) const {
  auto total = as_vector(out);
  total.setZero();
  Vector g(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < num_agents(); ++i) {
    gradient(i, x, as_span(g));
    total += g;
  }
}

double Objective::total_lipschitz() const {
  return static_cast<double>(num_agents()) * constants_.lip;
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticObjective::QuadraticObjective(std::vector<Matrix> hessians,
                                       std::vector<Vector> centers, double noise)
    : dim_(hessians.empty() ? 0 : static_cast<std::size_t>(hessians.front().rows())),
      hessians_(std::move(hessians)),
      centers_(std::move(centers)),
      noise_(noise) {
  if (hessians_.empty() || hessians_.size() != centers_.size()) {
    throw ArgumentError("quadratic objective needs one (A_i, c_i) pair per agent");
  }
  if (!(noise_ >= 0.0)) throw ArgumentError("noise level must be non-negative");
  double mu = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_),
                                              static_cast<Eigen::Index>(dim_));
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < hessians_.size(); ++i) {
    const Matrix& a = hessians_[i];
    if (static_cast<std::size_t>(a.rows()) != dim_ ||
        static_cast<std::size_t>(a.cols()) != dim_ ||
        static_cast<std::size_t>(centers_[i].size()) != dim_) {
      throw ArgumentError(fmt::format("agent {}: inconsistent dimensions", i));
    }
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff())) {
      throw ArgumentError(fmt::format("agent {}: Hessian is not symmetric", i));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    mu = std::min(mu, eig.eigenvalues().minCoeff());
    lip = std::max(lip, eig.eigenvalues().maxCoeff());
    sum += a;
    rhs += a * centers_[i];
  }
  if (!(mu > 0.0)) {
    throw ArgumentError("every A_i must be positive definite (strong convexity)");
  }
  constants_ = {mu, lip, noise_ * noise_};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> total(sum, Eigen::EigenvaluesOnly);
  total_lip_ = total.eigenvalues().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt(sum);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError("sum of Hessians is singular");
  }
  optimum_ = llt.solve(rhs);
}

double QuadraticObjective::value(std::size_t agent, std::span<const double> x) const {
  check_agent(agent, num_agents());
  const Vector d = as_vector(x) - centers_[agent];
  return 0.5 * d.dot(hessians_[agent] * d);
}

void QuadraticObjective::gradient(std::size_t agent, std::span<const double> x,
                                  std::span<double> out) const {
  check_agent(agent, num_agents());
  check_range({0, dim_}, dim_, out.size());
  as_vector(out).noalias() = hessians_[agent] * (as_vector(x) - centers_[agent]);
}

void QuadraticObjective::block_gradient(std::size_t agent, std::span<const double> x,
                                        BlockRange range, std::span<double> out) const {
  check_agent(agent, num_agents());
  check_range(range, dim_, out.size());
  const Vector d = as_vector(x) - centers_[agent];
  as_vector(out).noalias() =
      hessians_[agent].middleRows(static_cast<Eigen::Index>(range.offset),
                                  static_cast<Eigen::Index>(range.size)) *
      d;
}

void QuadraticObjective::stochastic_block_gradient(std::size_t agent,
                                                   std::span<const double> x,
                                                   BlockRange range, Rng& rng,
                                                   std::span<double> out) const {
  block_gradient(agent, x, range, out);
  if (noise_ == 0.0) return;
  // ξ is the full n-dimensional noise vector; only the block's coordinates
  // are kept, so the stream advances identically for every range.
  std::normal_distribution<double> gauss(0.0, noise_ / std::sqrt(static_cast<double>(dim_)));
  for (std::size_t c = 0; c < dim_; ++c) {
    const double z = gauss(rng);
    if (c >= range.offset && c < range.offset + range.size) out[c - range.offset] += z;
  }
}

std::string QuadraticObjective::describe() const {
  return fmt::format("quadratic(m={}, n={}, mu={:.6g}, L={:.6g}, nu={:.6g})", num_agents(),
                     dim_, constants_.mu, constants_.lip, noise_);
}

std::shared_ptr<QuadraticObjective> make_quadratic_objective(const QuadraticSpec& spec) {
  if (spec.agents < 1 || spec.dim < 1) {
    throw ArgumentError("quadratic objective needs m >= 1 and n >= 1");
  }
  if (!(spec.mu > 0.0) || !(spec.lip >= spec.mu)) {
    throw ArgumentError("quadratic spectrum needs 0 < mu <= L");
  }
  if (spec.dim == 1 && spec.mu != spec.lip) {
    throw ArgumentError("with n = 1 the spectrum cannot attain both mu and L");
  }
  const auto n = static_cast<Eigen::Index>(spec.dim);
  Vector spectrum(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
    spectrum(j) = spec.mu + t * (spec.lip - spec.mu);
  }
  std::vector<Matrix> hessians;
  std::vector<Vector> centers;
  for (std::size_t i = 0; i < spec.agents; ++i) {
    Rng rng = make_stream(spec.seed, 0, i, StreamPurpose::kProblem);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) g(r, c) = gauss(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    hessians.emplace_back(a);
    Vector c(n);
    for (Eigen::Index j = 0; j < n; ++j) c(j) = spec.center_scale * gauss(rng);
    centers.push_back(std::move(c));
  }
  return std::make_shared<QuadraticObjective>(std::move(hessians), std::move(centers),
                                              spec.noise);
}

// ---------------------------------------------------------------------------
// Logistic

LogisticObjective::LogisticObjective(std::shared_ptr<const Dataset> data,
                                     double regularization, std::size_t batch,
                                     std::size_t batch_cap)
    : data_(std::move(data)), regularization_(regularization), batch_(batch) {
  if (!data_) throw ArgumentError("logistic objective needs a dataset");
  if (!(regularization_ > 0.0)) throw ArgumentError("regularization mu must be positive");
  if (batch_ < 1) throw ArgumentError("batch size must be at least 1");
  if (batch_ > batch_cap) {
    throw ArgumentError(fmt::format("batch size {} exceeds the cap {}", batch_, batch_cap));
  }
  if (data_->shards.empty()) {
    throw PartitionError("dataset has not been partitioned across agents");
  }
  for (std::size_t i = 0; i < data_->shards.size(); ++i) {
    if (data_->shards[i].empty()) {
      throw PartitionError(fmt::format("agent {} has an empty shard", i));
    }
  }
  const double m = static_cast<double>(data_->shards.size());
  const double s = static_cast<double>(data_->num_samples());
  const double data_lip = gram_top_eigenvalue(data_->features) / (4.0 * s);
  constants_.mu = regularization_ / m;
  constants_.lip = data_lip + regularization_ / m;
  total_lip_ = data_lip + regularization_;
}

double LogisticObjective::value(std::size_t agent, std::span<const double> x) const {
  check_agent(agent, num_agents());
  const auto xv = as_vector(x);
  double loss = 0.0;
  for (std::size_t j : data_->shards[agent]) {
    const auto row = static_cast<Eigen::Index>(j);
    loss += softplus_neg(data_->labels[j] * data_->features.row(row).dot(xv.transpose()));
  }
  const double s = static_cast<double>(data_->num_samples());
  const double m = static_cast<double>(num_agents());
  return loss / s + 0.5 * (regularization_ / m) * xv.squaredNorm();
}

void LogisticObjective::gradient(std::size_t agent, std::span<const double> x,
                                 std::span<double> out) const {
  block_gradient(agent, x, {0, dim()}, out);
}

void LogisticObjective::block_gradient(std::size_t agent, std::span<const double> x,
                                       BlockRange range, std::span<double> out) const {
  check_agent(agent, num_agents());
  check_range(range, dim(), out.size());
  const auto xv = as_vector(x);
  auto g = as_vector(out);
  g.setZero();
  const auto off = static_cast<Eigen::Index>(range.offset);
  const auto len = static_cast<Eigen::Index>(range.size);
  for (std::size_t j : data_->shards[agent]) {
    const auto row = data_->features.row(static_cast<Eigen::Index>(j));
    const double v = data_->labels[j];
    const double coef = -v * sigmoid(-v * row.dot(xv.transpose()));
    g += coef * row.segment(off, len).transpose();
  }
  const double s = static_cast<double>(data_->num_samples());
  const double m = static_cast<double>(num_agents());
  g /= s;
  g += (regularization_ / m) * xv.segment(off, len);
}

void LogisticObjective::stochastic_block_gradient(std::size_t agent,
                                                  std::span<const double> x,
                                                  BlockRange range, Rng& rng,
                                                  std::span<double> out) const {
  check_agent(agent, num_agents());
  check_range(range, dim(), out.size());
  const auto& shard = data_->shards[agent];
  std::uniform_int_distribution<std::size_t> pick(0, shard.size() - 1);
  const auto xv = as_vector(x);
  auto g = as_vector(out);
  g.setZero();
  const auto off = static_cast<Eigen::Index>(range.offset);
  const auto len = static_cast<Eigen::Index>(range.size);
  for (std::size_t draw = 0; draw < batch_; ++draw) {
    const std::size_t j = shard[pick(rng)];
    const auto row = data_->features.row(static_cast<Eigen::Index>(j));
    const double v = data_->labels[j];
    const double coef = -v * sigmoid(-v * row.dot(xv.transpose()));
    g += coef * row.segment(off, len).transpose();
  }
  const double s = static_cast<double>(data_->num_samples());
  const double m = static_cast<double>(num_agents());
  g *= static_cast<double>(shard.size()) / (s * static_cast<double>(batch_));
  g += (regularization_ / m) * xv.segment(off, len);
}

std::string LogisticObjective::describe() const {
  return fmt::format("logistic(m={}, n={}, s={}, mu={:.6g}, batch={}, L={:.6g})",
                     num_agents(), dim(), data_->num_samples(), regularization_, batch_,
                     constants_.lip);
}

// ---------------------------------------------------------------------------

OptimumResult solve_optimum(const Objective& objective, const SolverOptions& options,
                            const Vector& start) {
  const auto n = static_cast<Eigen::Index>(objective.dim());
  Vector grad(n);
  if (auto closed = objective.closed_form_optimum()) {
    objective.total_gradient(as_span(*closed), as_span(grad));
    return {*closed, grad.norm(), 0};
  }
  const double lip = objective.total_lipschitz();
  const double mu = static_cast<double>(objective.num_agents()) * objective.constants().mu;
  if (!(lip > 0.0) || !(mu > 0.0)) {
    throw ArgumentError("solver needs positive smoothness and strong-convexity constants");
  }
  const double momentum = (std::sqrt(lip) - std::sqrt(mu)) / (std::sqrt(lip) + std::sqrt(mu));

  Vector x = start.size() == n ? start : Vector::Zero(n);
  Vector y = x;
  double residual = 0.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    objective.total_gradient(as_span(y), as_span(grad));
    residual = grad.norm();
    if (residual <= options.tolerance * std::max(1.0, y.norm())) {
      return {y, residual, it};
    }
    Vector next = y - grad / lip;
    if (grad.dot(next - x) > 0.0) {
      // Gradient restart: drop the momentum.
      y = next;
    } else {
      y = next + momentum * (next - x);
    }
    x = std::move(next);
  }
  throw ConvergenceError(
      fmt::format("optimum solver hit {} iterations with residual {:.3e}",
                  options.max_iterations, residual),
      residual);
}

double estimate_noise_bound(const Objective& objective, std::span<const Vector> probes,
                            std::size_t samples, Rng& rng) {
  if (probes.empty()) throw ArgumentError("noise estimate needs at least one probe point");
  if (samples < 1) throw ArgumentError("noise estimate needs at least one sample");
  const auto n = static_cast<Eigen::Index>(objective.dim());
  Vector exact(n);
  Vector draw(n);
  double worst = 0.0;
  for (const Vector& probe : probes) {
    for (std::size_t i = 0; i < objective.num_agents(); ++i) {
      objective.gradient(i, as_span(probe), as_span(exact));
      double sum = 0.0;
      for (std::size_t s = 0; s < samples; ++s) {
        objective.stochastic_gradient(i, as_span(probe), rng, as_span(draw));
        sum += (draw - exact).squaredNorm();
      }
      worst = std::max(worst, sum / static_cast<double>(samples));
    }
  }
  return worst;
}

}  // namespace drbsgt
