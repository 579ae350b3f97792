#pragma once

#include <cstddef>
#include <string>

namespace drbsgt {

/// Diminishing stepsize γ_k = γ / (k + Γ).
class StepSchedule {
 public:
  StepSchedule(double gamma, double offset);

  double gamma() const { return gamma_; }
  double offset() const { return offset_; }
  double at(std::size_t k) const { return gamma_ / (static_cast<double>(k) + offset_); }

 private:
  double gamma_;
  double offset_;
};

/// Explicit stepsize conditions of the rate analysis, evaluated for given
/// (γ, Γ, b, μ, L, ρ_W). Nothing here is enforced; callers decide.
struct ScheduleReport {
  double gamma = 0.0;
  double offset = 0.0;
  std::size_t num_blocks = 1;
  double mu = 0.0;
  double lip = 0.0;
  double rho = 0.0;

  /// γ_0 = γ/Γ and the cap min{2b/(μ+L), bμ/(4(b−1)L²)} (second term +∞ at b = 1).
  double initial_step = 0.0;
  double step_cap = 0.0;
  bool gamma0_ok = false;

  bool offset_exceeds_gamma = false;  // Γ > γ

  /// η = (b/2)(1 − ρ²)/ρ²; infinite when ρ_W = 0.
  double eta = 0.0;
  /// Lower bound on Γ driven by ρ_W; zero when ρ_W = 0.
  double spectral_offset_bound = 0.0;
  bool gamma_spectral_ok = false;
  bool spectral_vacuous = false;  // ρ_W = 0: deflated dynamics vanish in one step

  /// Iteration floor past which the y-recursion contracts; may be negative,
  /// in which case every k ≥ 0 qualifies.
  double k_threshold = 0.0;

  /// γ > 2b/μ, i.e. γθ₁ > 1 with θ₁ = μ/(2b) read off the mean-error
  /// recursion; needed for the O(1/k) bound. Informational.
  bool rate_gamma_ok = false;

  bool passes() const { return gamma0_ok && offset_exceeds_gamma && gamma_spectral_ok; }
  std::string to_text() const;
};

ScheduleReport validate_schedule(const StepSchedule& schedule, std::size_t num_blocks,
                                 double mu, double lip, double rho);

}  // namespace drbsgt
