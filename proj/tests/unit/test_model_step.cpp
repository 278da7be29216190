#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "smb/bench.hpp"
#include "smb/model_step.hpp"

namespace {

using smb::GroupStepInputs;
using smb::ParamVector;

Eigen::VectorXd vec(const ParamVector& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

TEST(Coefficients, ZeroCurvatureCollapsesToScaledGradient) {
  ParamVector g{1, 0}, gt{1, 0};
  auto c = smb::compute_coefficients({g, gt, 0.5, 0.8, 0.0});
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->delta, 0.3125, 1e-15);
  EXPECT_NEAR(c->c_g, -0.4, 1e-15);
  EXPECT_EQ(c->c_s, 0.0);
  auto s = smb::model_step({g, gt, 0.5, 0.8, 0.0});
  EXPECT_FALSE(s.degenerate);
  EXPECT_NEAR(s.step[0], -0.4, 1e-15);
  EXPECT_NEAR(s.step[1], 0.0, 1e-15);
}

TEST(Coefficients, WorkedExample) {
  ParamVector g{1, 0}, gt{1, 1};
  auto c = smb::compute_coefficients({g, gt, 1.0, 0.5, 0.0});
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->sigma, 3.0, 1e-14);
  EXPECT_NEAR(c->beta, 3.0, 1e-14);
  EXPECT_NEAR(c->gamma, 8.0, 1e-14);
  EXPECT_NEAR(2.0 * c->delta, 3.0, 1e-14);
  EXPECT_NEAR(c->theta, 8.0, 1e-14);
  auto s = smb::model_step({g, gt, 1.0, 0.5, 0.0});
  EXPECT_NEAR(s.step[0], -0.375, 1e-15);
  EXPECT_NEAR(s.step[1], -0.125, 1e-15);
}

TEST(Coefficients, DegenerateGradient) {
  ParamVector g{0, 0}, gt{1, 1};
  EXPECT_FALSE(smb::compute_coefficients({g, gt, 1.0, 0.5, 0.0}));
  auto s = smb::model_step({g, gt, 1.0, 0.5, 0.0});
  EXPECT_TRUE(s.degenerate);
  EXPECT_EQ(s.step, (ParamVector{0, 0}));
  EXPECT_THROW(smb::build_dense_H({g, gt, 1.0, 0.5, 0.0}), smb::Error);
}

TEST(Coefficients, GuardScalesWithIterate) {
  ParamVector g{1e-10};
  EXPECT_FALSE(smb::is_degenerate_gradient(g, 1.0));
  EXPECT_TRUE(smb::is_degenerate_gradient(g, 1e3));
}

TEST(DenseH, WorkedExample) {
  ParamVector g{1, 0}, gt{1, 1};
  auto h = smb::build_dense_H({g, gt, 1.0, 0.5, 0.0});
  Eigen::Matrix2d expect;
  expect << 0.375, 0.125, 0.125, 0.375;
  EXPECT_LT((h - expect).norm(), 1e-15);
  auto b = smb::build_dense_B({g, gt, 1.0, 0.5, 0.0});
  Eigen::Matrix2d bexp;
  bexp << 3, -1, -1, 3;
  EXPECT_LT((b - bexp).norm(), 1e-15);
  auto ext = smb::eigen_extremes(b);
  EXPECT_NEAR(ext.lambda_min, 2.0, 1e-14);
  EXPECT_NEAR(ext.lambda_max, 4.0, 1e-14);
}

TEST(DenseH, ZeroCurvature) {
  ParamVector g{1, 0}, gt{1, 0};
  auto h = smb::build_dense_H({g, gt, 0.5, 0.8, 0.0});
  EXPECT_LT((h - 0.8 * Eigen::Matrix2d::Identity()).norm(), 1e-15);
  auto b = smb::build_dense_B({g, gt, 0.5, 0.8, 0.0});
  EXPECT_LT((b - 1.25 * Eigen::Matrix2d::Identity()).norm(), 1e-15);
  auto ext = smb::eigen_extremes(b);
  EXPECT_NEAR(ext.lambda_min, 1.25, 1e-15);
  EXPECT_NEAR(ext.lambda_max, 1.25, 1e-15);
}

TEST(DenseH, CapAndSymmetry) {
  ParamVector g(20, 1.0), gt(20, 2.0);
  try {
    smb::build_dense_H({g, gt, 1.0, 0.5, 0.0}, 10);
    FAIL();
  } catch (const smb::Error& e) {
    EXPECT_EQ(e.kind(), smb::ErrorKind::kOracleTooLarge);
  }
  auto c = smb::random_step_case(3, 0, 6, 6);
  auto b = smb::build_dense_B(c.inputs());
  EXPECT_EQ(b, b.transpose().eval());
  Eigen::MatrixXd bad = b;
  bad(0, 1) += 1.0;
  EXPECT_THROW(smb::eigen_extremes(bad), smb::Error);
}

TEST(ModelStep, MatchesDenseOnRandomCases) {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto c = smb::random_step_case(11, i, 2, 10);
    auto in = c.inputs();
    auto s = smb::model_step(in);
    Eigen::VectorXd dense = -c.alpha * smb::build_dense_H(in) * vec(c.g);
    ASSERT_LT(rel_err(vec(s.step), dense), 1e-9) << "case " << i;
    Eigen::MatrixXd bh = smb::build_dense_B(in) * smb::build_dense_H(in);
    ASSERT_LT((bh - Eigen::MatrixXd::Identity(c.g.size(), c.g.size())).norm(), 1e-9);
    ParamVector st(c.g.size());
    for (std::size_t j = 0; j < st.size(); ++j) st[j] = -c.alpha * c.g[j];
    ASSERT_LE(smb::norm(s.step), c.eta * smb::norm(st) + 1e-10);
    ASSERT_TRUE(smb::check_trust_region(s.step, st));
  }
}

TEST(ModelStep, Homogeneity) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto c = smb::random_step_case(5, i, 2, 10);
    auto base = smb::model_step(c.inputs());
    for (double scale : {1e-3, 0.5, 7.0}) {
      ParamVector g = c.g, gt = c.g_t;
      for (auto& v : g) v *= scale;
      for (auto& v : gt) v *= scale;
      GroupStepInputs in{g, gt, c.alpha, c.eta, 0.0};
      auto s = smb::model_step(in);
      EXPECT_LT(rel_err(vec(s.step), scale * vec(base.step)), 1e-9);
      Eigen::VectorXd dense = -c.alpha * smb::build_dense_H(in) * vec(g);
      EXPECT_LT(rel_err(vec(s.step), dense), 1e-9);
    }
  }
}

TEST(ApplyScaling, OtherVector) {
  auto c = smb::random_step_case(9, 1, 7, 7);
  ParamVector v{1, -2, 3, 0.5, 0, 1, 2};
  auto s = smb::apply_scaling(c.inputs(), v);
  Eigen::VectorXd dense = -c.alpha * smb::build_dense_H(c.inputs()) * vec(v);
  EXPECT_LT(rel_err(vec(s.step), dense), 1e-12);
  auto own = smb::apply_scaling(c.inputs(), c.g);
  EXPECT_LT(rel_err(vec(own.step), vec(smb::model_step(c.inputs()).step)), 1e-12);
}

TEST(QuadraticModel, Interpolates) {
  ParamVector g{1, 0}, gt{0.5, 0};
  GroupStepInputs in{g, gt, 1.0, 0.8, 0.0};
  ParamVector zero{0, 0}, st{-1, 0}, mid{-0.5, 0};
  EXPECT_DOUBLE_EQ(smb::evaluate_quadratic_model(in, 1.0, 0.9, zero), 1.0);
  EXPECT_DOUBLE_EQ(smb::evaluate_quadratic_model(in, 1.0, 0.9, st), 0.9);
  EXPECT_NEAR(smb::evaluate_quadratic_model(in, 1.0, 0.9, mid), 0.825, 1e-15);
}

TEST(TrustRegion, Examples) {
  ParamVector st{-1, 0}, zero{0, 0}, s{-0.375, -0.125}, far{-2, 0};
  EXPECT_TRUE(smb::check_trust_region(zero, st));
  EXPECT_TRUE(smb::check_trust_region(st, st));
  EXPECT_TRUE(smb::check_trust_region(s, st));
  EXPECT_FALSE(smb::check_trust_region(far, st));
}

}  // namespace
