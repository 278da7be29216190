#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "smb/bench.hpp"
#include "smb/model_step.hpp"
#include "smb/optimizer.hpp"
#include "smb/problems.hpp"

namespace {

using smb::OptimizerConfig;
using smb::StepKind;
using smb::Variant;

smb::QuadraticProblem identity_quadratic(std::size_t dim = 2) {
  return smb::QuadraticProblem(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
}

OptimizerConfig full_batch_cfg(Variant v, double alpha, double c = 0.1) {
  OptimizerConfig cfg;
  cfg.variant = v;
  cfg.alpha0 = alpha;
  cfg.c = c;
  cfg.batch_size = 1;
  return cfg;
}

TEST(Armijo, Examples) {
  EXPECT_TRUE(smb::armijo_holds(1.0, 0.9, 0.5, 1.0, 0.1));
  EXPECT_FALSE(smb::armijo_holds(1.0, 0.96, 0.5, 1.0, 0.1));
  EXPECT_TRUE(smb::armijo_holds(0.7, 0.7, 0.5, 0.0, 0.1));
  EXPECT_THROW(smb::armijo_holds(1.0, NAN, 0.5, 1.0, 0.1), smb::Error);
}

TEST(SmbStep, ArmijoAccepted) {
  auto q = identity_quadratic();
  auto cfg = full_batch_cfg(Variant::kSMB, 0.1);
  auto st = smb::make_state(cfg, q.pack(Eigen::Vector2d(1, 1)));
  auto out = smb::smb_step(st, q, cfg);
  EXPECT_EQ(out.kind, StepKind::kArmijoAccepted);
  EXPECT_DOUBLE_EQ(out.loss_before, 1.0);
  EXPECT_NEAR(out.loss_trial, 0.81, 1e-15);
  EXPECT_NEAR(st.x.groups[0][0], 0.9, 1e-15);
  EXPECT_NEAR(st.x.groups[0][1], 0.9, 1e-15);
  EXPECT_EQ(st.evals.oracle_calls, 2);
}

TEST(SmbStep, ModelStepMatchesDenseH) {
  auto q = identity_quadratic();
  auto cfg = full_batch_cfg(Variant::kSMB, 1.9, 0.5);
  auto st = smb::make_state(cfg, q.pack(Eigen::Vector2d(1, 1)));
  auto out = smb::smb_step(st, q, cfg);
  ASSERT_EQ(out.kind, StepKind::kModelStep);
  smb::ParamVector g{1, 1}, gt{-0.9, -0.9};
  auto h = smb::build_dense_H({g, gt, 1.9, cfg.eta, 0.0});
  Eigen::Vector2d expect = Eigen::Vector2d(1, 1) - 1.9 * h * Eigen::Vector2d(1, 1);
  EXPECT_LT((q.unpack(st.x) - expect).norm(), 1e-12);
  EXPECT_LE(out.step_norms[0], cfg.eta * out.trial_norms[0] + 1e-10);
  EXPECT_EQ(st.evals.oracle_calls, 2);
}

TEST(SmbStep, DegenerateAtOptimum) {
  auto q = identity_quadratic();
  auto cfg = full_batch_cfg(Variant::kSMB, 1.0);
  auto st = smb::make_state(cfg, q.pack(Eigen::Vector2d(0, 0)));
  auto out = smb::smb_step(st, q, cfg);
  EXPECT_EQ(out.kind, StepKind::kDegenerateZero);
  EXPECT_TRUE(out.degenerate_groups[0]);
  EXPECT_EQ(q.unpack(st.x), Eigen::Vector2d(0, 0));
  EXPECT_EQ(st.evals.oracle_calls, 2);
}

TEST(SmbiStep, FullBatchEqualsSmb) {
  auto q = smb::QuadraticProblem::with_spectrum(6, 1, 10, 1, 0.0, 4, 2);
  auto x0 = q.initial_point(1);
  auto cfg = full_batch_cfg(Variant::kSMB, 0.5);
  auto a = smb::make_state(cfg, x0);
  auto cfg_i = cfg;
  cfg_i.variant = Variant::kSMBi;
  auto b = smb::make_state(cfg_i, x0);
  int model_steps = 0;
  for (int k = 0; k < 20; ++k) {
    auto oa = smb::smb_step(a, q, cfg);
    auto ob = smb::smbi_step(b, q, cfg_i);
    ASSERT_EQ(oa.kind, ob.kind);
    if (oa.kind == StepKind::kModelStep) ++model_steps;
    ASSERT_LT((q.unpack(a.x) - q.unpack(b.x)).norm(), 1e-12 * (1 + q.unpack(a.x).norm()));
  }
  EXPECT_GT(model_steps, 0);
}

TEST(SmbiStep, MinibatchMatchesDenseOracle) {
  auto q = smb::QuadraticProblem::with_spectrum(5, 1, 10, 64, 1.0, 8, 2);
  OptimizerConfig cfg;
  cfg.variant = Variant::kSMBi;
  cfg.alpha0 = 0.3;
  cfg.batch_size = 8;
  cfg.seed = 21;
  auto st = smb::make_state(cfg, q.initial_point(2));
  int model_steps = 0;
  for (int k = 0; k < 40; ++k) {
    const smb::ParamGroups before = st.x;
    const auto calls = st.evals.oracle_calls;
    auto out = smb::smbi_step(st, q, cfg);
    if (out.kind != StepKind::kModelStep) {
      EXPECT_EQ(st.evals.oracle_calls - calls, 2);
      continue;
    }
    ++model_steps;
    EXPECT_EQ(st.evals.oracle_calls - calls, 4);
    auto xi = smb::sample_batch(cfg.seed, smb::RngStream::kPrimary, k, 64, 8);
    auto xi2 = smb::sample_batch(cfg.seed, smb::RngStream::kIndependent, k, 64, 8);
    auto g = q.eval(before, xi).grads;
    auto g2 = q.eval(before, xi2).grads;
    auto trial = before;
    trial.axpy(-cfg.alpha0, g2);
    auto g2t = q.eval(trial, xi2).grads;
    for (std::size_t p = 0; p < before.size(); ++p) {
      auto h = smb::build_dense_H({g2.groups[p], g2t.groups[p], cfg.alpha0, cfg.eta, 0.0});
      Eigen::Map<const Eigen::VectorXd> gp(g.groups[p].data(), g.groups[p].size());
      Eigen::VectorXd expect = -cfg.alpha0 * h * gp;
      Eigen::VectorXd got(expect.size());
      for (std::size_t i = 0; i < got.size(); ++i) got[i] = st.x.groups[p][i] - before.groups[p][i];
      EXPECT_LT((got - expect).norm() / expect.norm(), 1e-9);
    }
  }
  EXPECT_GT(model_steps, 3);
}

TEST(SgdStep, Examples) {
  auto q = identity_quadratic();
  auto cfg = full_batch_cfg(Variant::kSGD, 0.1);
  auto st = smb::make_state(cfg, q.pack(Eigen::Vector2d(1, 1)));
  auto out = smb::sgd_step(st, q, cfg);
  EXPECT_EQ(out.kind, StepKind::kGradientStep);
  EXPECT_NEAR(st.x.groups[0][0], 0.9, 1e-15);
  EXPECT_EQ(st.evals.oracle_calls, 1);

  cfg.alpha0 = 0.0;
  EXPECT_THROW(cfg.validate(), smb::Error);
}

TEST(AdamStep, FirstStepMovesByAlpha) {
  auto q = identity_quadratic();
  auto cfg = full_batch_cfg(Variant::kAdam, 0.001);
  auto st = smb::make_state(cfg, q.pack(Eigen::Vector2d(1, 0)));
  smb::adam_step(st, q, cfg);
  EXPECT_NEAR(st.x.groups[0][0], 1.0 - 0.001, 1e-10);
  EXPECT_EQ(st.x.groups[0][1], 0.0);
  EXPECT_EQ(st.evals.oracle_calls, 1);
}

TEST(RunEpochs, QuadraticGradientShrinks) {
  auto q = smb::QuadraticProblem::with_spectrum(10, 1, 10, 1, 0.0, 3);
  auto x0 = q.initial_point(1);
  auto cfg = full_batch_cfg(Variant::kSMB, 0.1);
  auto r = smb::run_epochs(q, cfg, 1, x0);
  auto grad_norm = [&](const smb::ParamGroups& x) { return (q.a() * q.unpack(x) - q.b()).norm(); };
  EXPECT_LT(grad_norm(r.final_x), grad_norm(x0));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].oracle_evals, 2);
}

TEST(RunEpochs, BatchLargerThanData) {
  auto q = identity_quadratic();
  OptimizerConfig cfg;
  cfg.batch_size = 2;
  EXPECT_THROW(smb::run_epochs(q, cfg, 1, q.pack(Eigen::Vector2d(1, 1))), smb::Error);
}

TEST(RunEpochs, DivergenceIsRecorded) {
  auto q = smb::QuadraticProblem::with_spectrum(4, 1, 10, 1, 0.0, 3);
  auto cfg = full_batch_cfg(Variant::kSGD, 1.0);
  auto r = smb::run_epochs(q, cfg, 200, q.initial_point(1));
  EXPECT_TRUE(r.diverged);
  EXPECT_TRUE(r.records.back().diverged);
  EXPECT_LT(r.records.size(), 200u);
}

TEST(RunEpochs, MlpDeterministic) {
  smb::RunConfig rc;
  rc.problem = "mlp";
  rc.width = 16;
  rc.subset = 600;
  rc.epochs = 2;
  rc.optimizer.variant = Variant::kSMB;
  rc.optimizer.batch_size = 64;
  auto p = smb::build_problem(rc);
  auto a = smb::run_on(p, rc);
  auto b = smb::run_on(p, rc);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].train_loss, b.records[i].train_loss);
    EXPECT_EQ(a.records[i].test_accuracy, b.records[i].test_accuracy);
    EXPECT_EQ(a.records[i].oracle_evals, b.records[i].oracle_evals);
  }
  EXPECT_EQ(a.final_x.groups, b.final_x.groups);
}

TEST(RunEpochs, EvalAccountingPerVariant) {
  auto q = smb::QuadraticProblem::with_spectrum(6, 1, 10, 64, 0.5, 5, 2);
  for (Variant v : {Variant::kSGD, Variant::kAdam, Variant::kSMB, Variant::kSMBi}) {
    OptimizerConfig cfg;
    cfg.variant = v;
    cfg.alpha0 = 0.25;
    cfg.batch_size = 8;
    std::int64_t model_steps = 0;
    auto r = smb::run_epochs(q, cfg, 2, q.initial_point(1), {},
                             [&](const smb::OptimizerState&, const smb::StepOutcome& o) {
                               model_steps += o.kind == StepKind::kModelStep;
                             });
    const std::int64_t iters = 16;
    std::int64_t expect = iters;
    if (v == Variant::kSMB) expect = 2 * iters;
    if (v == Variant::kSMBi) expect = 2 * iters + 2 * model_steps;
    EXPECT_EQ(r.records.back().oracle_evals, expect) << smb::to_string(v);
  }
}

TEST(RunEpochs, LogisticSmbNotWorseThanSgd) {
  smb::RunConfig rc;
  rc.problem = "logistic";
  rc.epochs = 10;
  rc.optimizer.alpha0 = 1.0;
  auto p = smb::build_problem(rc);
  rc.optimizer.variant = Variant::kSGD;
  auto sgd = smb::run_on(p, rc);
  rc.optimizer.variant = Variant::kSMB;
  auto smb_run = smb::run_on(p, rc);
  EXPECT_LE(smb_run.records.back().train_loss, sgd.records.back().train_loss);
}

}  // namespace
