#include "drbsgt/schedule.hpp"

#include "drbsgt/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace drbsgt {
namespace {

// ρ_W below this is treated as exact averaging.
constexpr double kZeroRho = 1e-12;

const char* verdict(bool ok) { return ok ? "ok" : "FAIL"; }

}  // namespace

StepSchedule::StepSchedule(double gamma, double offset) : gamma_(gamma), offset_(offset) {
  if (!(gamma > 0.0) || !(offset > 0.0) || !std::isfinite(gamma) || !std::isfinite(offset)) {
    throw ArgumentError("stepsize schedule needs gamma > 0 and Gamma > 0");
  }
}

ScheduleReport validate_schedule(const StepSchedule& schedule, std::size_t num_blocks,
                                 double mu, double lip, double rho) {
  if (num_blocks < 1 || !(mu > 0.0) || !(lip > 0.0)) {
    throw ArgumentError("validate_schedule needs b >= 1, mu > 0, L > 0");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ArgumentError(fmt::format("rho_W must lie in [0,1), got {}", rho));
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double b = static_cast<double>(num_blocks);
  const double gamma = schedule.gamma();
  const double offset = schedule.offset();

  ScheduleReport r;
  r.gamma = gamma;
  r.offset = offset;
  r.num_blocks = num_blocks;
  r.mu = mu;
  r.lip = lip;
  r.rho = rho;

  const double first_cap = 2.0 * b / (mu + lip);
  const double second_cap = num_blocks == 1 ? inf : b * mu / (4.0 * (b - 1.0) * lip * lip);
  r.step_cap = std::min(first_cap, second_cap);
  r.initial_step = gamma / offset;
  r.gamma0_ok = r.initial_step <= r.step_cap;
  r.offset_exceeds_gamma = offset > gamma;
  r.rate_gamma_ok = gamma > 2.0 * b / mu;

  if (rho < kZeroRho) {
    r.spectral_vacuous = true;
    r.eta = inf;
    r.spectral_offset_bound = 0.0;
    r.gamma_spectral_ok = true;
    r.k_threshold = -offset;
    return r;
  }

  const double rho2 = rho * rho;
  const double gap = 1.0 - rho2;
  r.eta = 0.5 * b * gap / rho2;
  const double y_growth =
      2.0 * lip * lip * rho2 + 2.0 * (b - 1.0) * lip * lip * (1.0 + rho2) * rho2 / gap;
  const double coupling = 1.0 / (b * b) + 1.0 / (b * r.eta);
  r.spectral_offset_bound = gamma * std::sqrt(3.0 / gap * coupling * y_growth);
  r.gamma_spectral_ok = offset >= r.spectral_offset_bound;

  const double floor_coupling = 1.0 / (b * b) + 2.0 * rho2 / (b * b * gap);
  r.k_threshold = gamma * std::sqrt(floor_coupling * y_growth / (0.5 * (1.0 + rho2))) - offset;
  return r;
}

std::string ScheduleReport::to_text() const {
  std::string out;
  out += fmt::format("gamma                 {:.17g}\n", gamma);
  out += fmt::format("Gamma                 {:.17g}\n", offset);
  out += fmt::format("b                     {}\n", num_blocks);
  out += fmt::format("mu                    {:.17g}\n", mu);
  out += fmt::format("L                     {:.17g}\n", lip);
  out += fmt::format("rho_W                 {:.17g}\n", rho);
  out += fmt::format("gamma_0 = gamma/Gamma {:.17g}\n", initial_step);
  out += fmt::format("gamma_0 cap           {:.17g}\n", step_cap);
  out += fmt::format("eta                   {:.17g}\n", eta);
  out += fmt::format("Gamma spectral bound  {:.17g}\n", spectral_offset_bound);
  out += fmt::format("k threshold           {:.17g}\n", k_threshold);
  out += fmt::format("check gamma_0 <= cap  {}\n", verdict(gamma0_ok));
  out += fmt::format("check Gamma > gamma   {}\n", verdict(offset_exceeds_gamma));
  out += fmt::format("check Gamma spectral  {}{}\n", verdict(gamma_spectral_ok),
                     spectral_vacuous ? " (vacuous, rho_W = 0)" : "");
  out += fmt::format("info  gamma > 2b/mu   {}\n", verdict(rate_gamma_ok));
  out += fmt::format("overall               {}\n", passes() ? "PASS" : "FAIL");
  return out;
}

}  // namespace drbsgt
