#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace smb {

enum class ScheduleKind { kConstant, kDiminishing, kAutoSchedule };

const char* to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

struct ScheduleDescriptor {
  ScheduleKind kind = ScheduleKind::kConstant;
  double phi = 0.75;              // Diminishing: alpha0 * k^-phi, phi in (0.5, 1)
  double shrink_factor = 0.9;     // AutoSchedule multiplier
  double trigger_fraction = 0.05; // AutoSchedule threshold on the model-step fraction
  double alpha_max = 1.0;

  /// Throws kConfig on an invalid descriptor.
  void validate() const;
};

/// Stepsize at iteration k >= 1. For AutoSchedule `alpha0` is the currently
/// held value, which only changes at epoch ends.
double stepsize_at(const ScheduleDescriptor& desc, double alpha0, std::int64_t k);

/// End-of-epoch update: shrink when more than trigger_fraction of the epoch's
/// iterations needed a model step, otherwise grow, never above alpha_max.
double auto_schedule_update(double alpha, std::int64_t model_steps, std::int64_t total_steps,
                            const ScheduleDescriptor& desc);

struct AnalysisConstants {
  double L = 1.0;  // Lipschitz constant of the gradient
  double M = 0.0;  // gradient-noise bound
  double eta = 0.8;
  double alpha_max = 1.0;
};

/// Smallest admissible alpha_max: (-1 + sqrt(1 + 16 eta^2)) / (4 L eta).
double alpha_max_lower_bound(double L, double eta);

/// 2 / (L / eta + 2 L^2 alpha_max).
double theorem1_stepsize_cap(const AnalysisConstants& consts);

/// The constant stepsize 1 / (L / eta + 2 L^2 alpha_max).
double theorem1_constant_stepsize(const AnalysisConstants& consts);

/// Output-iterate distribution P(R = k) proportional to
/// alpha_k / (1/eta + 2 L alpha_max) - alpha_k^2 L / 2.
std::vector<double> theorem1_pmf(std::span<const double> alphas, const AnalysisConstants& consts);

}  // namespace smb
