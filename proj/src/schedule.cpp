#include "smb/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "smb/error.hpp"

namespace smb {

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kDiminishing: return "diminishing";
    case ScheduleKind::kAutoSchedule: return "auto";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "diminishing") return ScheduleKind::kDiminishing;
  if (name == "auto") return ScheduleKind::kAutoSchedule;
  throw Error(ErrorKind::kConfig, "schedule: unknown kind '" + name + "' (constant|diminishing|auto)");
}

void ScheduleDescriptor::validate() const {
  if (kind == ScheduleKind::kDiminishing && !(phi > 0.5 && phi < 1.0)) {
    throw Error(ErrorKind::kConfig, "phi: must lie in (0.5, 1) for the diminishing schedule");
  }
  if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) {
    throw Error(ErrorKind::kConfig, "shrink_factor: must lie in (0, 1)");
  }
  if (!(trigger_fraction > 0.0 && trigger_fraction < 1.0)) {
    throw Error(ErrorKind::kConfig, "trigger_fraction: must lie in (0, 1)");
  }
  if (!(alpha_max > 0.0)) throw Error(ErrorKind::kConfig, "alpha_max: must be positive");
}

double stepsize_at(const ScheduleDescriptor& desc, double alpha0, std::int64_t k) {
  if (k < 1) throw Error(ErrorKind::kPrecondition, "schedule iteration index must be >= 1");
  switch (desc.kind) {
    case ScheduleKind::kConstant:
    case ScheduleKind::kAutoSchedule:
      return alpha0;
    case ScheduleKind::kDiminishing:
      return alpha0 * std::pow(static_cast<double>(k), -desc.phi);
  }
  return alpha0;
}

double auto_schedule_update(double alpha, std::int64_t model_steps, std::int64_t total_steps,
                            const ScheduleDescriptor& desc) {
  if (total_steps < 1) throw Error(ErrorKind::kPrecondition, "total_steps must be >= 1");
  if (!(alpha > 0.0)) throw Error(ErrorKind::kPrecondition, "alpha must be positive");
  const double fraction = static_cast<double>(model_steps) / static_cast<double>(total_steps);
  if (fraction > desc.trigger_fraction) return alpha * desc.shrink_factor;
  return std::min(alpha / desc.shrink_factor, desc.alpha_max);
}

double alpha_max_lower_bound(double L, double eta) {
  if (!(L > 0.0) || !(eta > 0.0)) throw Error(ErrorKind::kPrecondition, "L and eta must be positive");
  return (-1.0 + std::sqrt(1.0 + 16.0 * eta * eta)) / (4.0 * L * eta);
}

namespace {

void check_constants(const AnalysisConstants& c) {
  if (!(c.L > 0.0) || !(c.eta > 0.0) || !(c.alpha_max > 0.0) || !(c.M >= 0.0)) {
    throw Error(ErrorKind::kPrecondition, "analysis constants must be positive");
  }
}

}  // namespace

double theorem1_stepsize_cap(const AnalysisConstants& c) {
  check_constants(c);
  return 2.0 / (c.L / c.eta + 2.0 * c.L * c.L * c.alpha_max);
}

double theorem1_constant_stepsize(const AnalysisConstants& c) { return 0.5 * theorem1_stepsize_cap(c); }

std::vector<double> theorem1_pmf(std::span<const double> alphas, const AnalysisConstants& c) {
  check_constants(c);
  if (alphas.empty()) throw Error(ErrorKind::kPrecondition, "need at least one stepsize");
  const double kappa = 1.0 / c.eta + 2.0 * c.L * c.alpha_max;
  std::vector<double> mass(alphas.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const double a = alphas[k];
    mass[k] = a / kappa - a * a * c.L / 2.0;
    if (!(mass[k] > 0.0)) {
      throw Error(ErrorKind::kPrecondition, "stepsize " + std::to_string(a) + " gives non-positive mass");
    }
    total += mass[k];
  }
  for (double& m : mass) m /= total;
  return mass;
}

}  // namespace smb
