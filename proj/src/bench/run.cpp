#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "smb/bench.hpp"

namespace smb {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_metrics_csv(std::ostream& os, const RunConfig& cfg, const std::vector<RunRecord>& records) {
  os << "# smb run\n";
  for (const auto& [k, v] : cfg.serialize()) os << "# " << k << '=' << csv_escape(v) << '\n';
  os << kMetricsHeader << '\n';
  for (const RunRecord& r : records) {
    os << r.epoch << ',' << r.iter << ',' << format_double(r.train_loss) << ','
       << (r.test_accuracy ? format_double(*r.test_accuracy) : std::string()) << ',' << format_double(r.alpha) << ','
       << format_double(r.model_step_fraction) << ',' << r.oracle_evals << ',' << format_double(r.wall_time_s) << ','
       << (r.diverged ? 1 : 0) << '\n';
  }
}

RunResult run_on(const ProblemInstance& problem, const RunConfig& cfg, const StepObserver& observer) {
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  TestMetric metric;
  if (problem.classifier && problem.data && !problem.data->test.empty()) {
    const Classifier* model = problem.classifier;
    const std::vector<std::size_t>* rows = &problem.data->test;
    metric = [model, rows](const ParamGroups& x) { return accuracy(*model, x, *rows); };
  }
  return run_epochs(*problem.oracle, opt, cfg.epochs, problem.x0, metric, observer);
}

namespace {

void write_to(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kConfig, "out: cannot write '" + path + "'");
  body(f);
}

}  // namespace

RunOutcome cmd_run(const RunConfig& cfg, std::ostream& csv_out) {
  const ProblemInstance problem = build_problem(cfg);
  RunOutcome out;
  out.result = run_on(problem, cfg);
  write_to(cfg.out, csv_out, [&](std::ostream& os) { write_metrics_csv(os, cfg, out.result.records); });
  out.exit_code = out.result.diverged ? kExitDiverged : kExitOk;
  return out;
}

const SweepCell& SweepResult::cell(Variant v, double alpha) const {
  for (const SweepCell& c : cells) {
    if (c.variant == v && c.alpha == alpha) return c;
  }
  throw Error(ErrorKind::kPrecondition, "no sweep cell for " + std::string(to_string(v)) + " at alpha " +
                                            format_double(alpha));
}

SweepResult run_sweep(const RunConfig& base, const std::vector<double>& grid, const std::vector<Variant>& variants,
                      std::size_t jobs) {
  if (grid.empty()) throw Error(ErrorKind::kConfig, "grid: must contain at least one stepsize");
  if (variants.empty()) throw Error(ErrorKind::kConfig, "variants: must name at least one optimizer");

  SweepResult result;
  result.grid = grid;
  result.variants = variants;
  for (Variant v : variants) {
    for (double a : grid) {
      SweepCell c;
      c.variant = v;
      c.alpha = a;
      result.cells.push_back(c);
    }
  }

  // The problem is read-only after construction, so all cells share it.
  const ProblemInstance problem = build_problem(base);

  // Each worker owns the cells it claims; results land in preassigned slots,
  // so the output does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      SweepCell& cell = result.cells[i];
      RunConfig cfg = base;
      cfg.optimizer.variant = cell.variant;
      cfg.optimizer.alpha0 = cell.alpha;
      try {
        const RunResult r = run_on(problem, cfg);
        cell.records = r.records;
        cell.diverged = r.diverged;
        if (!r.records.empty()) {
          cell.final_loss = r.records.back().train_loss;
          cell.final_accuracy = r.records.back().test_accuracy;
        }
      } catch (const std::exception& e) {
        cell.diverged = true;
        cell.error = e.what();
        cell.final_loss = std::numeric_limits<double>::infinity();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, result.cells.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return result;
}

void write_sweep_csv(std::ostream& os, const RunConfig& base, const SweepResult& result) {
  os << "# smb sweep\n";
  for (const auto& [k, v] : base.serialize()) {
    if (k != "alpha" && k != "optimizer") os << "# " << k << '=' << csv_escape(v) << '\n';
  }
  os << kSweepHeader << '\n';
  for (const SweepCell& c : result.cells) {
    const RunRecord* last = c.records.empty() ? nullptr : &c.records.back();
    os << to_string(c.variant) << ',' << format_double(c.alpha) << ',' << format_double(c.final_loss) << ','
       << (c.final_accuracy ? format_double(*c.final_accuracy) : std::string()) << ',' << (c.diverged ? 1 : 0) << ','
       << c.records.size() << ',' << (last ? last->oracle_evals : 0) << ','
       << (last ? format_double(last->model_step_fraction) : std::string()) << '\n';
  }
}

std::string sweep_cell_path(const std::string& summary_path, Variant v, double alpha) {
  std::string stem = summary_path;
  if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0) stem.resize(stem.size() - 4);
  return stem + "." + to_string(v) + ".alpha" + format_double(alpha) + ".csv";
}

int cmd_sweep(const RunConfig& base, const std::vector<double>& grid, const std::vector<Variant>& variants,
              std::size_t jobs, std::ostream& csv_out, SweepResult* out) {
  SweepResult result = run_sweep(base, grid, variants, jobs);
  write_to(base.out, csv_out, [&](std::ostream& os) { write_sweep_csv(os, base, result); });
  if (!base.out.empty()) {
    for (const SweepCell& c : result.cells) {
      RunConfig cfg = base;
      cfg.optimizer.variant = c.variant;
      cfg.optimizer.alpha0 = c.alpha;
      cfg.out = sweep_cell_path(base.out, c.variant, c.alpha);
      write_to(cfg.out, csv_out, [&](std::ostream& os) { write_metrics_csv(os, cfg, c.records); });
    }
  }
  if (out) *out = std::move(result);
  return kExitOk;
}

}  // namespace smb
