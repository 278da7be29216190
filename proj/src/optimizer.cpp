#include "smb/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "smb/model_step.hpp"

namespace smb {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kSGD: return "sgd";
    case Variant::kSMB: return "smb";
    case Variant::kSMBi: return "smbi";
    case Variant::kAdam: return "adam";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "sgd") return Variant::kSGD;
  if (name == "smb") return Variant::kSMB;
  if (name == "smbi") return Variant::kSMBi;
  if (name == "adam") return Variant::kAdam;
  throw Error(ErrorKind::kConfig, "optimizer: unknown variant '" + name + "' (sgd|adam|smb|smbi)");
}

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::kArmijoAccepted: return "armijo";
    case StepKind::kModelStep: return "model";
    case StepKind::kDegenerateZero: return "degenerate";
    case StepKind::kGradientStep: return "gradient";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw Error(ErrorKind::kConfig, "alpha: must be positive and finite");
  if (!(c > 0.0)) throw Error(ErrorKind::kConfig, "c: must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorKind::kConfig, "eta: must lie in (0, 1)");
  if (alpha_max < 0.0) throw Error(ErrorKind::kConfig, "alpha_max: must be positive (0 selects 10 * alpha)");
  if (alpha0 > effective_alpha_max()) throw Error(ErrorKind::kConfig, "alpha: must not exceed alpha_max");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size: must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw Error(ErrorKind::kConfig, "adam: betas must lie in [0, 1) and eps must be positive");
  }
  ScheduleDescriptor s = schedule;
  s.alpha_max = effective_alpha_max();
  s.validate();
}

OptimizerState make_state(const OptimizerConfig& cfg, ParamGroups x0) {
  OptimizerState s;
  s.x = std::move(x0);
  s.alpha = cfg.alpha0;
  s.alpha_base = cfg.alpha0;
  s.primary = {cfg.seed, 0};
  s.independent = {cfg.seed, 0};
  if (cfg.variant == Variant::kAdam) {
    s.adam_m = s.x.zeros_like();
    s.adam_v = s.x.zeros_like();
  }
  return s;
}

bool armijo_holds(double f, double f_t, double alpha, double grad_sq_norm, double c) {
  if (!std::isfinite(f) || !std::isfinite(f_t) || !std::isfinite(alpha) || !std::isfinite(grad_sq_norm)) {
    throw Error(ErrorKind::kNumericalOverflow, "Armijo test received a non-finite value");
  }
  return f_t <= f - c * alpha * grad_sq_norm;
}

namespace {

// Shared head of the SGD-like iterations: stepsize and primary batch for k.
struct IterationStart {
  double alpha;
  Batch batch;
};

IterationStart begin_iteration(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  IterationStart it;
  it.alpha = stepsize_at(cfg.schedule, state.alpha_base, state.iter + 1);
  state.alpha = it.alpha;
  it.batch = sample_batch(state.primary, RngStream::kPrimary, oracle.dataset_size(), cfg.batch_size);
  return it;
}

void finish_iteration(OptimizerState& state, const StepOutcome& out) {
  ++state.iter;
  ++state.total_steps_epoch;
  if (out.kind == StepKind::kModelStep) ++state.model_step_count_epoch;
}

std::vector<double> group_norms(const ParamGroups& v, double scale) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& g : v.groups) out.push_back(std::abs(scale) * norm(g));
  return out;
}

// Evaluates f, g at x and f_t, g_t at x - alpha g on the same batch, then
// either accepts the trial point or reports that a model step is needed.
struct TrialResult {
  EvalResult at_x;
  EvalResult at_trial;
  ParamGroups trial_x;
  bool accepted = false;
  bool all_degenerate = false;
};

TrialResult trial_and_test(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg,
                           const IterationStart& it, StepOutcome& out) {
  TrialResult t;
  t.at_x = evaluate(oracle, state.x, it.batch);
  ++state.evals.oracle_calls;
  t.trial_x = state.x;
  t.trial_x.axpy(-it.alpha, t.at_x.grads);
  t.at_trial = evaluate(oracle, t.trial_x, it.batch);
  ++state.evals.oracle_calls;

  out.alpha = it.alpha;
  out.loss_before = t.at_x.loss;
  out.loss_trial = t.at_trial.loss;
  out.trial_norms = group_norms(t.at_x.grads, it.alpha);
  out.degenerate_groups.resize(state.x.size());
  t.all_degenerate = true;
  for (std::size_t p = 0; p < state.x.size(); ++p) {
    out.degenerate_groups[p] = is_degenerate_gradient(t.at_x.grads.groups[p], norm(state.x.groups[p]));
    t.all_degenerate = t.all_degenerate && out.degenerate_groups[p];
  }
  t.accepted = armijo_holds(t.at_x.loss, t.at_trial.loss, it.alpha, t.at_x.grads.squared_norm(), cfg.c);
  return t;
}

// Returns true when the iteration is already resolved (accepted or degenerate).
bool resolve_without_model(OptimizerState& state, TrialResult& t, StepOutcome& out) {
  if (t.all_degenerate) {
    out.kind = StepKind::kDegenerateZero;
    out.step_norms.assign(state.x.size(), 0.0);
    return true;
  }
  if (t.accepted) {
    out.kind = StepKind::kArmijoAccepted;
    out.step_norms = out.trial_norms;
    state.x = std::move(t.trial_x);
    return true;
  }
  return false;
}

}  // namespace

StepOutcome smb_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  StepOutcome out;
  const IterationStart it = begin_iteration(state, oracle, cfg);
  TrialResult t = trial_and_test(state, oracle, cfg, it, out);
  if (!resolve_without_model(state, t, out)) {
    out.kind = StepKind::kModelStep;
    out.step_norms.assign(state.x.size(), 0.0);
    for (std::size_t p = 0; p < state.x.size(); ++p) {
      auto& xp = state.x.groups[p];
      const GroupStepInputs in{t.at_x.grads.groups[p], t.at_trial.grads.groups[p], it.alpha, cfg.eta, norm(xp)};
      const ModelStepResult r = model_step(in);
      for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += r.step[i];
      out.step_norms[p] = norm(r.step);
    }
  }
  finish_iteration(state, out);
  return out;
}

StepOutcome smbi_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  StepOutcome out;
  const std::uint64_t k_index = state.primary.counter;
  const IterationStart it = begin_iteration(state, oracle, cfg);
  TrialResult t = trial_and_test(state, oracle, cfg, it, out);
  if (!resolve_without_model(state, t, out)) {
    // One fresh batch per iteration, shared by all groups; the scaling built
    // on it is applied to the original gradient g_k.
    const Batch fresh = sample_batch(state.independent.seed, RngStream::kIndependent, k_index,
                                     oracle.dataset_size(), cfg.batch_size);
    state.independent.counter = k_index + 1;
    const EvalResult at_x = evaluate(oracle, state.x, fresh);
    ++state.evals.oracle_calls;
    ParamGroups trial_x = state.x;
    trial_x.axpy(-it.alpha, at_x.grads);
    const EvalResult at_trial = evaluate(oracle, trial_x, fresh);
    ++state.evals.oracle_calls;

    out.kind = StepKind::kModelStep;
    out.step_norms.assign(state.x.size(), 0.0);
    for (std::size_t p = 0; p < state.x.size(); ++p) {
      auto& xp = state.x.groups[p];
      const GroupStepInputs model{at_x.grads.groups[p], at_trial.grads.groups[p], it.alpha, cfg.eta, norm(xp)};
      const ModelStepResult r = apply_scaling(model, t.at_x.grads.groups[p]);
      for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += r.step[i];
      out.step_norms[p] = norm(r.step);
    }
  }
  finish_iteration(state, out);
  return out;
}

StepOutcome sgd_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  StepOutcome out;
  const IterationStart it = begin_iteration(state, oracle, cfg);
  const EvalResult r = evaluate(oracle, state.x, it.batch);
  ++state.evals.oracle_calls;
  state.x.axpy(-it.alpha, r.grads);
  out.kind = StepKind::kGradientStep;
  out.alpha = it.alpha;
  out.loss_before = r.loss;
  out.loss_trial = std::numeric_limits<double>::quiet_NaN();
  out.step_norms = group_norms(r.grads, it.alpha);
  finish_iteration(state, out);
  return out;
}

StepOutcome adam_step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  StepOutcome out;
  const IterationStart it = begin_iteration(state, oracle, cfg);
  const EvalResult r = evaluate(oracle, state.x, it.batch);
  ++state.evals.oracle_calls;
  if (!state.adam_m.same_shape(state.x)) {
    state.adam_m = state.x.zeros_like();
    state.adam_v = state.x.zeros_like();
  }
  const double t = static_cast<double>(state.iter + 1);
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  out.step_norms.assign(state.x.size(), 0.0);
  for (std::size_t p = 0; p < state.x.size(); ++p) {
    auto& x = state.x.groups[p];
    auto& m = state.adam_m.groups[p];
    auto& v = state.adam_v.groups[p];
    const auto& g = r.grads.groups[p];
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double update = it.alpha * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + cfg.adam_eps);
      x[i] -= update;
      sq += update * update;
    }
    out.step_norms[p] = std::sqrt(sq);
  }
  out.kind = StepKind::kGradientStep;
  out.alpha = it.alpha;
  out.loss_before = r.loss;
  out.loss_trial = std::numeric_limits<double>::quiet_NaN();
  finish_iteration(state, out);
  return out;
}

StepOutcome step(OptimizerState& state, const StochasticOracle& oracle, const OptimizerConfig& cfg) {
  switch (cfg.variant) {
    case Variant::kSGD: return sgd_step(state, oracle, cfg);
    case Variant::kSMB: return smb_step(state, oracle, cfg);
    case Variant::kSMBi: return smbi_step(state, oracle, cfg);
    case Variant::kAdam: return adam_step(state, oracle, cfg);
  }
  throw Error(ErrorKind::kConfig, "optimizer: unknown variant");
}

void end_epoch(OptimizerState& state, const OptimizerConfig& cfg) {
  if (cfg.schedule.kind == ScheduleKind::kAutoSchedule && state.total_steps_epoch > 0) {
    ScheduleDescriptor desc = cfg.schedule;
    desc.alpha_max = cfg.effective_alpha_max();
    state.alpha_base = auto_schedule_update(state.alpha_base, state.model_step_count_epoch,
                                            state.total_steps_epoch, desc);
  }
  state.model_step_count_epoch = 0;
  state.total_steps_epoch = 0;
  ++state.epoch;
}

RunResult run_epochs(const StochasticOracle& oracle, const OptimizerConfig& cfg, int epochs, ParamGroups x0,
                     const TestMetric& test_metric, const StepObserver& observer) {
  cfg.validate();
  if (epochs < 1) throw Error(ErrorKind::kConfig, "epochs: must be >= 1");
  const std::size_t n = oracle.dataset_size();
  if (cfg.batch_size > n) {
    throw Error(ErrorKind::kInvalidBatchSize,
                "batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " + std::to_string(n));
  }
  const std::size_t iters_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;

  OptimizerState state = make_state(cfg, std::move(x0));
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  for (int e = 1; e <= epochs; ++e) {
    double loss_sum = 0.0;
    std::size_t counted = 0;
    bool diverged = false;
    for (std::size_t i = 0; i < iters_per_epoch; ++i) {
      StepOutcome out;
      try {
        out = step(state, oracle, cfg);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::kNumericalOverflow) throw;
        loss_sum = std::numeric_limits<double>::infinity();
        ++counted;
        diverged = true;
        break;
      }
      if (observer) observer(state, out);
      loss_sum += out.loss_before;
      ++counted;
      if (!(out.loss_before <= kDivergenceLoss) || !state.x.all_finite()) {
        diverged = true;
        break;
      }
    }

    RunRecord rec;
    rec.epoch = e;
    rec.iter = state.iter;
    rec.train_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
    rec.alpha = state.alpha;
    rec.model_step_fraction = state.total_steps_epoch
                                  ? static_cast<double>(state.model_step_count_epoch) /
                                        static_cast<double>(state.total_steps_epoch)
                                  : 0.0;
    rec.oracle_evals = state.evals.oracle_calls;
    rec.diverged = diverged;
    if (test_metric && !diverged) rec.test_accuracy = test_metric(state.x);
    rec.wall_time_s = elapsed();
    result.records.push_back(rec);
    if (diverged) {
      result.diverged = true;
      break;
    }
    end_epoch(state, cfg);
  }
  result.final_x = std::move(state.x);
  return result;
}

}  // namespace smb
