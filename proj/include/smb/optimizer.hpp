#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smb/core.hpp"
#include "smb/schedule.hpp"

namespace smb {

enum class Variant { kSGD, kSMB, kSMBi, kAdam };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

struct OptimizerConfig {
  Variant variant = Variant::kSMB;
  double alpha0 = 1.0;
  double c = 0.1;           // Armijo constant
  double eta = 0.8;         // model steps satisfy ||s_p|| <= eta ||s_t,p||
  double alpha_max = 0.0;   // 0 selects 10 * alpha0
  std::size_t batch_size = 128;
  ScheduleDescriptor schedule;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  double effective_alpha_max() const { return alpha_max > 0.0 ? alpha_max : 10.0 * alpha0; }
  /// Throws kConfig with a field-level message.
  void validate() const;
};

struct EvalCounters {
  std::int64_t oracle_calls = 0;  // each call returns loss and gradient
};

struct OptimizerState {
  ParamGroups x;
  double alpha = 0.0;        // stepsize used by the latest iteration
  double alpha_base = 0.0;   // alpha0, or the held auto-schedule value
  std::int64_t iter = 0;     // completed iterations k
  std::int64_t epoch = 0;
  std::int64_t model_step_count_epoch = 0;
  std::int64_t total_steps_epoch = 0;
  EvalCounters evals;
  RngState primary;      // xi_k = sample(seed, kPrimary, k - 1)
  RngState independent;  // xi'_k = sample(seed, kIndependent, k - 1)
  // Adam moments (empty for other variants).
  ParamGroups adam_m, adam_v;
};

OptimizerState make_state(const OptimizerConfig& cfg, ParamGroups x0);

enum class StepKind { kArmijoAccepted, kModelStep, kDegenerateZero, kGradientStep };

const char* to_string(StepKind kind);

struct StepOutcome {
  StepKind kind = StepKind::kGradientStep;
  double loss_before = 0.0;
  double loss_trial = 0.0;
  double alpha = 0.0;
  std::vector<double> step_norms;   // ||s_p|| per group
  std::vector<double> trial_norms;  // ||s_t,p|| = alpha ||g_p|| per group (SMB/SMBi)
  std::vector<bool> degenerate_groups;
};

/// f_t <= f - c * alpha * ||g||^2, with ||g||^2 taken over all groups.
bool armijo_holds(double f, double f_t, double alpha, double grad_sq_norm, double c);

StepOutcome smb_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg);
StepOutcome smbi_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg);
StepOutcome sgd_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg);
StepOutcome adam_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg);

/// Dispatches on cfg.variant.
StepOutcome step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg);

/// Applies the schedule's epoch-boundary update and resets epoch counters.
void end_epoch(OptimizerState& state, const OptimizerConfig& cfg);

struct RunRecord {
  std::int64_t epoch = 0;
  std::int64_t iter = 0;
  double train_loss = 0.0;  // mean of f_k over the epoch's iterations
  std::optional<double> test_accuracy;
  double alpha = 0.0;
  double model_step_fraction = 0.0;
  std::int64_t oracle_evals = 0;
  double wall_time_s = 0.0;
  bool diverged = false;
};

inline constexpr double kDivergenceLoss = 1e12;

struct RunResult {
  std::vector<RunRecord> records;
  ParamGroups final_x;
  bool diverged = false;
};

using StepObserver = std::function<void(const OptimizerState&, const StepOutcome&)>;
using TestMetric = std::function<double(const ParamGroups&)>;

/// ceil(N / m) iterations per epoch. Stops early with a diverged record when
/// the loss exceeds kDivergenceLoss or anything becomes non-finite.
RunResult run_epochs(const StochasticOracle& oracle, const OptimizerConfig& cfg, int epochs, ParamGroups x0,
                     const TestMetric& test_metric = {}, const StepObserver& observer = {});

}  // namespace smb
