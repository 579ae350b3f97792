#pragma once

#include "drbsgt/algorithms.hpp"
#include "drbsgt/linalg.hpp"
#include "drbsgt/objectives.hpp"
#include "drbsgt/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace drbsgt {

struct MetricsRow {
  std::size_t k = 0;
  double gamma_k = 0.0;
  double err1 = 0.0;       // ‖x̄_k − x*‖²
  double err2 = 0.0;       // ‖x_k − 1x̄_k‖²_F
  double err3 = 0.0;       // ‖y_k − 1ȳ_k‖²_F
  double objective = 0.0;  // Σ_i f_i(x̄_k)
  double tracking_residual = 0.0;
  std::uint64_t block_evals = 0;
};

/// Stored rows of one sample path; iterations strictly increasing.
class MetricsSeries {
 public:
  void push(const MetricsRow& row);
  const std::vector<MetricsRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  const MetricsRow& back() const { return rows_.back(); }

 private:
  std::vector<MetricsRow> rows_;
};

/// Relative tracking residual ‖b ȳ_k − (b/m) Σ_i U_{ℓ_i} cache_i‖ / (1 + ‖ȳ_k‖),
/// with b the block count for DRBSGT and 1 for DSGT. Zero for ATC, which
/// does not track.
double tracking_residual(const SwarmState& state);

MetricsRow record(const SwarmState& state, const Objective& objective, const Vector& x_star,
                  const StepSchedule& schedule);

enum class Field { kErr1, kErr2, kErr3, kObjective };

double field_value(const MetricsRow& row, Field field);

struct FitWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  FitWindow window;
  std::size_t points = 0;
};

/// Least-squares slope of log(value) against log(t).
RateFit fit_log_log(std::span<const double> t, std::span<const double> values);

/// Averages `field` across paths at every stored k in the window, then fits
/// log(mean) against log(k + Γ). Needs at least 10 stored points; a zero in
/// the window raises DegenerateFitError.
RateFit fit_rate(std::span<const MetricsSeries> paths, Field field, FitWindow window,
                 double offset);

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Student-t interval mean ± t_{(1+level)/2, count−1} · sd/√count. A single
/// sample yields a point interval.
Interval confidence_interval(std::span<const double> samples, double level = 0.90);

struct ConsensusPoint {
  std::size_t k = 0;
  double gamma_k = 0.0;
  double err2 = 0.0;
  double err3 = 0.0;
};

struct ConsensusViolation {
  std::size_t path = 0;
  std::size_t k = 0;  // the inequality bounds err2 at k+1 from data at k
  double lhs = 0.0;
  double rhs = 0.0;
};

/// ((1+ρ²)/2)·err2 + (γ_k²(1+ρ²)ρ²/(1−ρ²))·err3.
double consensus_bound(double err2, double err3, double gamma_k, double rho);

/// Per-path check of err2_{k+1} ≤ consensus_bound(err2_k, err3_k, γ_k, ρ) + slack
/// over consecutive points. Throws InapplicableError unless ρ ∈ (0, 1).
std::vector<ConsensusViolation> check_consensus_recursion(
    std::span<const std::vector<ConsensusPoint>> paths, double rho, double slack = 1e-10);

/// Which iterations get stored: every k below `dense_until`, then about
/// `points_per_decade` log-spaced iterations per decade, plus the horizon.
class StoragePlan {
 public:
  StoragePlan(std::size_t horizon, std::size_t dense_until = 1000,
              std::size_t points_per_decade = 100);

  const std::vector<std::size_t>& iterations() const { return iterations_; }
  bool stores(std::size_t k) const;

 private:
  std::vector<std::size_t> iterations_;
};

}  // namespace drbsgt
