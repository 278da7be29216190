// smb: run, sweep, verify and gradcheck subcommands over the SMB optimizers.
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "smb/bench.hpp"

namespace {

const std::vector<std::pair<std::string, std::string>> kRunKeys = {
    {"problem", "quadratic | logistic | mlp"},
    {"optimizer", "sgd | adam | smb | smbi"},
    {"alpha", "initial stepsize"},
    {"alpha-max", "stepsize ceiling (default 10 * alpha)"},
    {"eta", "model-step contraction in (0, 1)"},
    {"c", "Armijo constant"},
    {"batch-size", "mini-batch size"},
    {"epochs", "number of epochs"},
    {"schedule", "constant | diminishing | auto"},
    {"phi", "diminishing-schedule exponent in (0.5, 1)"},
    {"shrink", "auto-schedule factor"},
    {"trigger", "auto-schedule model-step fraction threshold"},
    {"seed", "seed for data, initialisation and batches"},
    {"out", "output CSV path (default stdout)"},
    {"data", "dataset: IDX directory/file, .csv (column 'label') or libsvm"},
    {"width", "MLP hidden width"},
    {"subset", "use the first N samples of the dataset"},
    {"test-fraction", "held-out fraction"},
    {"l2", "logistic L2 weight"},
    {"dim", "quadratic dimension"},
    {"mu", "quadratic smallest eigenvalue"},
    {"lipschitz", "quadratic largest eigenvalue"},
    {"samples", "quadratic sample count"},
    {"noise", "quadratic per-sample gradient noise"},
    {"groups", "quadratic parameter groups"},
    {"logistic-samples", "synthetic logistic sample count"},
    {"logistic-dim", "synthetic logistic dimension"},
};

struct RunOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_run_options(CLI::App* cmd, RunOptions& ro) {
  cmd->add_option("--config", ro.config_path, "flat key=value file; flags override it");
  for (const auto& [key, help] : kRunKeys) {
    ro.options[key] = cmd->add_option("--" + key, ro.values[key], help);
  }
}

smb::RunConfig resolve(const RunOptions& ro) {
  smb::RunConfig cfg;
  if (!ro.config_path.empty()) {
    std::ifstream in(ro.config_path);
    if (!in) throw smb::Error(smb::ErrorKind::kConfig, "config: cannot read '" + ro.config_path + "'");
    std::stringstream text;
    text << in.rdbuf();
    cfg = smb::parse_config_text(text.str(), cfg);
  }
  for (const auto& [key, opt] : ro.options) {
    if (opt->count() > 0) smb::set_field(cfg, key, ro.values.at(key));
  }
  cfg.validate();
  return cfg;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    smb::RunConfig scratch;
    smb::set_field(scratch, "alpha", item);
    grid.push_back(scratch.optimizer.alpha0);
  }
  return grid;
}

std::vector<smb::Variant> parse_variants(const std::string& text) {
  std::vector<smb::Variant> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(smb::parse_variant(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic model building optimizers: experiments and verification"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "train one configuration and write per-epoch metrics");
  add_run_options(run, run_opts);

  RunOptions sweep_opts;
  std::string grid_text = "0.001,0.01,0.1,0.25,0.5,0.75,1.0";
  std::string variants_text = "sgd,adam,smb";
  std::size_t jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run every (optimizer, stepsize) cell of a grid");
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--grid", grid_text, "comma-separated stepsizes")->capture_default_str();
  sweep->add_option("--variants", variants_text, "comma-separated optimizers")->capture_default_str();
  sweep->add_option("--jobs", jobs, "worker threads (0 = all cores)");

  smb::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "check the model step against its dense quasi-Newton form");
  verify->add_option("--seed", verify_opts.seed, "seed for the random cases")->capture_default_str();
  verify->add_option("--trials", verify_opts.trials, "number of random cases")->capture_default_str();
  verify->add_option("--min-dim", verify_opts.min_dim)->capture_default_str();
  verify->add_option("--max-dim", verify_opts.max_dim)->capture_default_str();

  RunOptions grad_opts;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
  add_run_options(gradcheck, grad_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return smb::kExitConfig;
  }

  try {
    if (*run) {
      return smb::cmd_run(resolve(run_opts), std::cout).exit_code;
    }
    if (*sweep) {
      const smb::RunConfig cfg = resolve(sweep_opts);
      return smb::cmd_sweep(cfg, parse_grid(grid_text), parse_variants(variants_text), jobs, std::cout);
    }
    if (*verify) {
      return smb::cmd_verify(verify_opts, std::cout);
    }
    if (*gradcheck) {
      return smb::cmd_gradcheck(resolve(grad_opts), std::cout);
    }
  } catch (const smb::Error& e) {
    std::cerr << e.what() << '\n';
    return e.kind() == smb::ErrorKind::kNumericalOverflow ? smb::kExitDiverged : smb::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return smb::kExitConfig;
  }
  return smb::kExitOk;
}
