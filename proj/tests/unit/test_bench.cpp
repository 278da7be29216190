#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "smb/bench.hpp"

namespace {

using smb::RunConfig;
using smb::Variant;

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Metrics table without provenance comments and without the wall_time column.
std::vector<std::string> table_body(const std::string& csv) {
  std::vector<std::string> out;
  for (const auto& line : lines_of(csv)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    fields.erase(fields.begin() + 7);
    std::string joined;
    for (const auto& f : fields) joined += f + ",";
    out.push_back(joined);
  }
  return out;
}

RunConfig quadratic_cfg() {
  RunConfig cfg;
  cfg.problem = "quadratic";
  cfg.optimizer.variant = Variant::kSMB;
  cfg.optimizer.alpha0 = 0.1;
  cfg.optimizer.batch_size = 256;
  cfg.samples = 256;
  cfg.epochs = 5;
  return cfg;
}

TEST(CmdRun, QuadraticFiveRowsDecreasing) {
  std::ostringstream os;
  auto out = smb::cmd_run(quadratic_cfg(), os);
  EXPECT_EQ(out.exit_code, smb::kExitOk);
  auto body = table_body(os.str());
  ASSERT_EQ(body.size(), 6u);
  EXPECT_EQ(lines_of(os.str())[0], "# smb run");
  const auto& rec = out.result.records;
  ASSERT_EQ(rec.size(), 5u);
  for (std::size_t i = 1; i < rec.size(); ++i) EXPECT_LT(rec[i].train_loss, rec[i - 1].train_loss);
}

TEST(CmdRun, Deterministic) {
  std::ostringstream a, b;
  auto cfg = quadratic_cfg();
  cfg.optimizer.batch_size = 32;
  cfg.noise = 0.5;
  smb::cmd_run(cfg, a);
  smb::cmd_run(cfg, b);
  EXPECT_EQ(table_body(a.str()), table_body(b.str()));
}

TEST(CmdRun, MlpDivergesAtHugeStepsize) {
  RunConfig cfg;
  cfg.problem = "mlp";
  cfg.subset = 1000;
  cfg.epochs = 2;
  cfg.optimizer.variant = Variant::kSGD;
  // alpha = 100 peaks near 1e7 before the ReLUs die and the loss settles
  cfg.optimizer.alpha0 = 1000.0;
  std::ostringstream os;
  auto out = smb::cmd_run(cfg, os);
  EXPECT_EQ(out.exit_code, smb::kExitDiverged);
  ASSERT_FALSE(out.result.records.empty());
  EXPECT_TRUE(out.result.records.back().diverged);
  EXPECT_NE(os.str().find(",1\n"), std::string::npos);
}

TEST(CmdSweep, PaperGridThreeVariants) {
  auto cfg = quadratic_cfg();
  cfg.optimizer.batch_size = 32;
  cfg.noise = 0.5;
  cfg.epochs = 2;
  std::ostringstream os;
  smb::SweepResult res;
  int code = smb::cmd_sweep(cfg, smb::kPaperAlphaGrid, {Variant::kSGD, Variant::kAdam, Variant::kSMB}, 2, os, &res);
  EXPECT_EQ(code, smb::kExitOk);
  EXPECT_EQ(res.cells.size(), 21u);
  std::size_t rows = 0;
  for (const auto& line : lines_of(os.str())) rows += !line.empty() && line[0] != '#';
  EXPECT_EQ(rows, 22u);
  EXPECT_EQ(res.cell(Variant::kAdam, 0.25).alpha, 0.25);
  EXPECT_THROW(res.cell(Variant::kSMBi, 0.25), smb::Error);
}

TEST(CmdSweep, SingleCellMatchesRun) {
  auto cfg = quadratic_cfg();
  cfg.optimizer.batch_size = 16;
  cfg.noise = 0.5;
  cfg.epochs = 3;
  cfg.optimizer.alpha0 = 0.25;
  std::ostringstream run_csv;
  smb::cmd_run(cfg, run_csv);

  smb::SweepResult res;
  std::ostringstream ignored;
  smb::cmd_sweep(cfg, {0.25}, {Variant::kSMB}, 1, ignored, &res);
  std::ostringstream cell_csv;
  smb::write_metrics_csv(cell_csv, cfg, res.cells.at(0).records);
  EXPECT_EQ(table_body(run_csv.str()), table_body(cell_csv.str()));
}

TEST(CmdSweep, CellPath) {
  EXPECT_EQ(smb::sweep_cell_path("out/sweep.csv", Variant::kSMBi, 0.25), "out/sweep.smbi.alpha0.25.csv");
}

TEST(CmdVerify, PassesAndDetectsCorruption) {
  smb::VerifyOptions opts;
  std::ostringstream os;
  EXPECT_EQ(smb::cmd_verify(opts, os), smb::kExitOk);
  auto rep = smb::run_verification(opts);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_LT(rep.get("oracle_equivalence").max_error, 1e-9);
  EXPECT_EQ(rep.get("oracle_equivalence").cases, 1000u);

  opts.trials = 100;
  opts.dense_h = [](const smb::GroupStepInputs& in) {
    smb::DenseScalingMatrix h = smb::build_dense_H(in);
    h(0, 1) *= 1.001;
    return h;
  };
  EXPECT_EQ(smb::cmd_verify(opts, os), smb::kExitVerification);

  smb::VerifyOptions none;
  none.trials = 0;
  EXPECT_EQ(smb::cmd_verify(none, os), smb::kExitConfig);
}

TEST(CmdGradcheck, BuiltInProblems) {
  std::ostringstream os;
  smb::GradCheckReport rep;
  RunConfig q = quadratic_cfg();
  EXPECT_EQ(smb::cmd_gradcheck(q, os, &rep), smb::kExitOk);
  EXPECT_LT(rep.max_rel_error, 1e-9);
  RunConfig lg;
  lg.problem = "logistic";
  EXPECT_EQ(smb::cmd_gradcheck(lg, os, &rep), smb::kExitOk);
  RunConfig mlp;
  mlp.problem = "mlp";
  mlp.width = 8;
  mlp.subset = 500;
  EXPECT_EQ(smb::cmd_gradcheck(mlp, os, &rep), smb::kExitOk);
  EXPECT_LT(rep.max_rel_error, smb::kGradcheckTolerance);
}

TEST(Config, ParseText) {
  auto cfg = smb::parse_config_text(
      "# comment\n"
      "problem = logistic\n"
      "optimizer = smbi\n"
      "alpha = 0.5\n"
      "\n"
      "batch-size=64\n"
      "schedule = auto\n");
  EXPECT_EQ(cfg.problem, "logistic");
  EXPECT_EQ(cfg.optimizer.variant, Variant::kSMBi);
  EXPECT_EQ(cfg.optimizer.alpha0, 0.5);
  EXPECT_EQ(cfg.optimizer.batch_size, 64u);
  EXPECT_EQ(cfg.optimizer.schedule.kind, smb::ScheduleKind::kAutoSchedule);
  EXPECT_THROW(smb::parse_config_text("colour = blue\n"), smb::Error);
  EXPECT_THROW(smb::parse_config_text("alpha = fast\n"), smb::Error);
  EXPECT_THROW(smb::parse_config_text("just words\n"), smb::Error);
}

TEST(Config, RoundTrip) {
  RunConfig cfg = quadratic_cfg();
  cfg.optimizer.eta = 0.7;
  std::string text;
  for (const auto& [k, v] : cfg.serialize()) text += k + " = " + v + "\n";
  RunConfig back = smb::parse_config_text(text);
  EXPECT_EQ(back.serialize(), cfg.serialize());
}

TEST(Config, Validate) {
  RunConfig cfg;
  cfg.optimizer.eta = 1.0;
  EXPECT_THROW(cfg.validate(), smb::Error);
  cfg = RunConfig{};
  cfg.problem = "resnet";
  EXPECT_THROW(cfg.validate(), smb::Error);
  cfg = RunConfig{};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), smb::Error);
}

TEST(Csv, Formatting) {
  EXPECT_EQ(smb::csv_escape("plain"), "plain");
  EXPECT_EQ(smb::csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(smb::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(smb::format_double(0.1), "0.1");
  EXPECT_EQ(smb::format_double(1.0), "1");
}

}  // namespace
