#pragma once

// Experiment harness behind the `smb` command line tool: configuration,
// problem construction, single runs, stepsize sweeps, the model-step
// verification battery and gradient checks.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smb/gradcheck.hpp"
#include "smb/model_step.hpp"
#include "smb/optimizer.hpp"
#include "smb/problems.hpp"

namespace smb {

enum ExitCode : int {
  kExitOk = 0,
  kExitDiverged = 1,
  kExitConfig = 2,
  kExitVerification = 3,
};

struct RunConfig {
  std::string problem = "mlp";  // quadratic | logistic | mlp
  OptimizerConfig optimizer;
  int epochs = 5;
  std::uint64_t seed = 1;
  std::string out;   // empty: stdout
  std::string data;  // empty: built-in data for the problem
  std::size_t width = 100;
  std::size_t subset = 10000;
  double test_fraction = 0.2;
  double l2 = 1e-4;
  // quadratic
  std::size_t dim = 10;
  double mu = 1.0;
  double lipschitz = 10.0;
  std::size_t samples = 256;
  double noise = 0.0;
  std::size_t groups = 1;
  // synthetic logistic
  std::size_t logistic_samples = 4000;
  std::size_t logistic_dim = 20;

  /// Throws kConfig naming the offending field.
  void validate() const;
  /// Every field as (key, value), in a fixed order, using the config-file keys.
  std::vector<std::pair<std::string, std::string>> serialize() const;
};

/// Sets one field from its config-file key (e.g. "alpha-max"). Throws kConfig
/// for unknown keys or unparsable values.
void set_field(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat "key = value" lines; blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
RunConfig parse_config_text(const std::string& text, RunConfig base = {});

struct ProblemInstance {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const StochasticOracle> oracle;
  const Classifier* classifier = nullptr;  // points into oracle when it classifies
  ParamGroups x0;
  std::optional<double> lipschitz;  // quadratic only
  std::string description;
};

/// Default directory of the bundled MNIST subset.
std::string default_data_dir();

ProblemInstance build_problem(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// CSV

std::string csv_escape(const std::string& field);
std::string format_double(double v);

inline constexpr const char* kMetricsHeader =
    "epoch,iter,train_loss,test_accuracy,alpha,model_step_fraction,oracle_evals,wall_time_s,diverged";

/// Provenance comment lines ("# key=value") followed by the metrics table.
void write_metrics_csv(std::ostream& os, const RunConfig& cfg, const std::vector<RunRecord>& records);

// ---------------------------------------------------------------------------
// Commands

struct RunOutcome {
  RunResult result;
  int exit_code = kExitOk;
};

/// Runs one configuration on a prebuilt problem.
RunResult run_on(const ProblemInstance& problem, const RunConfig& cfg, const StepObserver& observer = {});

/// Builds the problem, runs it and writes the metrics CSV to cfg.out (or
/// `csv_out` when cfg.out is empty).
RunOutcome cmd_run(const RunConfig& cfg, std::ostream& csv_out);

struct SweepCell {
  Variant variant = Variant::kSMB;
  double alpha = 0.0;
  double final_loss = 0.0;
  std::optional<double> final_accuracy;
  bool diverged = false;
  std::string error;  // set when the cell failed before producing records
  std::vector<RunRecord> records;
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<Variant> variants;
  std::vector<SweepCell> cells;  // variant-major, grid order

  const SweepCell& cell(Variant v, double alpha) const;
};

inline constexpr const char* kSweepHeader =
    "variant,alpha,final_train_loss,final_test_accuracy,diverged,epochs_completed,oracle_evals,"
    "final_model_step_fraction";

inline const std::vector<double> kPaperAlphaGrid = {0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0};

/// Every (variant, alpha) cell with identical seeds, on up to `jobs` threads
/// (0 = hardware concurrency). Cell failures are recorded as divergence.
SweepResult run_sweep(const RunConfig& base, const std::vector<double>& grid, const std::vector<Variant>& variants,
                      std::size_t jobs = 0);

void write_sweep_csv(std::ostream& os, const RunConfig& base, const SweepResult& result);

/// Per-cell metrics file name derived from the summary path.
std::string sweep_cell_path(const std::string& summary_path, Variant v, double alpha);

/// run_sweep plus output files: the summary to base.out (or `csv_out`) and,
/// when base.out is set, one metrics file per cell.
int cmd_sweep(const RunConfig& base, const std::vector<double>& grid, const std::vector<Variant>& variants,
              std::size_t jobs, std::ostream& csv_out, SweepResult* result = nullptr);

struct PropertyResult {
  std::string name;
  bool passed = true;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool all_passed() const;
  const PropertyResult& get(const std::string& name) const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  std::size_t min_dim = 2;
  std::size_t max_dim = 10;
  /// Dense H under test; replaceable to check that the battery notices a
  /// corrupted formula.
  std::function<DenseScalingMatrix(const GroupStepInputs&)> dense_h;
};

/// Random (g, y, alpha, eta) draw used by the verification battery.
struct RandomStepCase {
  ParamVector g, g_t;
  double alpha = 0.0;
  double eta = 0.0;
  GroupStepInputs inputs() const { return {g, g_t, alpha, eta, 0.0}; }
};
RandomStepCase random_step_case(std::uint64_t seed, std::uint64_t index, std::size_t min_dim, std::size_t max_dim);

VerifyReport run_verification(const VerifyOptions& opts);
void print_verify_report(std::ostream& os, const VerifyReport& report);
int cmd_verify(const VerifyOptions& opts, std::ostream& os);

inline constexpr double kGradcheckTolerance = 1e-5;

/// Finite-difference check of the configured problem at a seeded random
/// point; exit code 3 when any group's relative error reaches 1e-5.
int cmd_gradcheck(const RunConfig& cfg, std::ostream& os, GradCheckReport* report = nullptr);

}  // namespace smb
