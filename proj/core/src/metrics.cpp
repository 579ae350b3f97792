#include "drbsgt/metrics.hpp"

#include "drbsgt/error.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace drbsgt {

void MetricsSeries::push(const MetricsRow& row) {
  if (!rows_.empty() && row.k <= rows_.back().k) {
    throw ArgumentError(fmt::format("metrics rows must have increasing k ({} after {})", row.k,
                                    rows_.back().k));
  }
  rows_.push_back(row);
}

double tracking_residual(const SwarmState& state) {
  if (state.algorithm == Algorithm::kAtc || state.cache.empty()) return 0.0;
  const double m = static_cast<double>(state.x.rows());
  RowVector tracked = RowVector::Zero(state.x.cols());
  for (std::size_t i = 0; i < state.cache.size(); ++i) {
    const BlockRange r = state.cached_range[i];
    tracked.segment(static_cast<Eigen::Index>(r.offset), static_cast<Eigen::Index>(r.size)) +=
        state.cache[i].transpose();
  }
  tracked /= m;
  const RowVector y_mean = row_mean(state.y);
  const double scale =
      state.algorithm == Algorithm::kDrbsgt ? static_cast<double>(state.num_blocks) : 1.0;
  return scale * (y_mean - tracked).norm() / (1.0 + y_mean.norm());
}

MetricsRow record(const SwarmState& state, const Objective& objective, const Vector& x_star,
                  const StepSchedule& schedule) {
  MetricsRow row;
  row.k = state.iter;
  row.gamma_k = schedule.at(state.iter);
  const Vector x_mean = row_mean(state.x).transpose();
  row.err1 = (x_mean - x_star).squaredNorm();
  row.err2 = dispersion_squared(state.x);
  row.err3 = dispersion_squared(state.y);
  row.objective = objective.total_value(as_span(x_mean));
  row.tracking_residual = tracking_residual(state);
  row.block_evals = state.block_evals;
  return row;
}

double field_value(const MetricsRow& row, Field field) {
  switch (field) {
    case Field::kErr1:
      return row.err1;
    case Field::kErr2:
      return row.err2;
    case Field::kErr3:
      return row.err3;
    case Field::kObjective:
      return row.objective;
  }
  return 0.0;
}

RateFit fit_log_log(std::span<const double> t, std::span<const double> values) {
  if (t.size() != values.size() || t.size() < 2) {
    throw ArgumentError("log-log fit needs matching inputs with at least two points");
  }
  const auto count = static_cast<double>(t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (!(values[j] > 0.0) || !(t[j] > 0.0)) {
      throw DegenerateFitError(fmt::format(
          "non-positive value {} at point {}; use a larger noise level or shorter horizon",
          values[j], j));
    }
    const double lx = std::log(t[j]);
    const double ly = std::log(values[j]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double cov = sxy - sx * sy / count;
  const double var_x = sxx - sx * sx / count;
  const double var_y = syy - sy * sy / count;
  if (!(var_x > 0.0)) throw DegenerateFitError("log-log fit needs distinct abscissae");
  RateFit fit;
  fit.slope = cov / var_x;
  fit.intercept = (sy - fit.slope * sx) / count;
  fit.r_squared = var_y > 0.0 ? cov * cov / (var_x * var_y) : 1.0;
  fit.points = t.size();
  return fit;
}

RateFit fit_rate(std::span<const MetricsSeries> paths, Field field, FitWindow window,
                 double offset) {
  if (paths.empty()) throw ArgumentError("fit_rate needs at least one path");
  std::map<std::size_t, std::pair<double, std::size_t>> sums;
  for (const MetricsSeries& series : paths) {
    for (const MetricsRow& row : series.rows()) {
      if (row.k < window.first || row.k > window.last) continue;
      auto& [sum, count] = sums[row.k];
      sum += field_value(row, field);
      ++count;
    }
  }
  std::vector<double> t;
  std::vector<double> mean;
  for (const auto& [k, acc] : sums) {
    if (acc.second != paths.size()) continue;  // only iterations every path stored
    t.push_back(static_cast<double>(k) + offset);
    mean.push_back(acc.first / static_cast<double>(acc.second));
  }
  if (t.size() < 10) {
    throw DegenerateFitError(fmt::format("window [{}, {}] holds {} stored points, need 10",
                                         window.first, window.last, t.size()));
  }
  RateFit fit = fit_log_log(t, mean);
  fit.window = window;
  return fit;
}

Interval confidence_interval(std::span<const double> samples, double level) {
  if (samples.empty()) throw ArgumentError("confidence interval of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must be in (0,1)");
  const double count = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= count;
  if (std::ranges::all_of(samples, [&](double s) { return s == samples.front(); })) {
    return {samples.front(), samples.front(), samples.front()};
  }
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (count - 1.0));
  if (sd == 0.0) return {mean, mean, mean};
  const boost::math::students_t dist(count - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + 0.5 * level);
  const double half = t * sd / std::sqrt(count);
  return {mean, mean - half, mean + half};
}

double consensus_bound(double err2, double err3, double gamma_k, double rho) {
  const double rho2 = rho * rho;
  return 0.5 * (1.0 + rho2) * err2 +
         gamma_k * gamma_k * (1.0 + rho2) * rho2 / (1.0 - rho2) * err3;
}

std::vector<ConsensusViolation> check_consensus_recursion(
    std::span<const std::vector<ConsensusPoint>> paths, double rho, double slack) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw InapplicableError(fmt::format(
        "consensus recursion check needs rho_W in (0,1), got {}; check err2 = 0 instead", rho));
  }
  std::vector<ConsensusViolation> violations;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& points = paths[p];
    for (std::size_t j = 0; j + 1 < points.size(); ++j) {
      if (points[j + 1].k != points[j].k + 1) continue;
      const double rhs =
          consensus_bound(points[j].err2, points[j].err3, points[j].gamma_k, rho);
      if (points[j + 1].err2 > rhs + slack) {
        violations.push_back({p, points[j].k, points[j + 1].err2, rhs});
      }
    }
  }
  return violations;
}

StoragePlan::StoragePlan(std::size_t horizon, std::size_t dense_until,
                         std::size_t points_per_decade) {
  const std::size_t dense = std::min(horizon + 1, std::max<std::size_t>(dense_until, 1));
  for (std::size_t k = 0; k < dense; ++k) iterations_.push_back(k);
  if (points_per_decade > 0 && dense <= horizon) {
    const double base = static_cast<double>(dense);
    for (std::size_t j = 0;; ++j) {
      const double value = base * std::pow(10.0, static_cast<double>(j) /
                                                      static_cast<double>(points_per_decade));
      const auto k = static_cast<std::size_t>(std::llround(value));
      if (k > horizon) break;
      if (k > iterations_.back()) iterations_.push_back(k);
    }
  }
  if (iterations_.back() != horizon) iterations_.push_back(horizon);
}

bool StoragePlan::stores(std::size_t k) const {
  return std::binary_search(iterations_.begin(), iterations_.end(), k);
}

}  // namespace drbsgt
