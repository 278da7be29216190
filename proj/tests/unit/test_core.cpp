#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "smb/core.hpp"
#include "smb/jacobi.hpp"

namespace {

using smb::Batch;
using smb::RngStream;

std::vector<std::size_t> draw(std::uint64_t counter) {
  return smb::sample_batch(7, RngStream::kPrimary, counter, 100, 16).indices;
}

TEST(SampleBatch, FullBatchIsPermutation) {
  auto b = smb::sample_batch(7, RngStream::kPrimary, 0, 10, 10);
  std::vector<std::size_t> expect(10);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(b.indices, expect);
}

TEST(SampleBatch, Deterministic) {
  EXPECT_EQ(draw(0), draw(0));
  EXPECT_EQ(draw(5), draw(5));
}

TEST(SampleBatch, Golden) {
  const std::vector<std::size_t> c0 = {1, 3, 5, 7, 8, 14, 28, 39, 45, 46, 49, 51, 55, 66, 89, 90};
  const std::vector<std::size_t> c1 = {5, 6, 10, 15, 16, 20, 23, 29, 39, 44, 51, 54, 65, 73, 89, 97};
  EXPECT_EQ(draw(0), c0);
  EXPECT_EQ(draw(1), c1);
  EXPECT_NE(c0, c1);
}

TEST(SampleBatch, SortedDistinctInRange) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    auto idx = smb::sample_batch(3, RngStream::kIndependent, k, 37, 12).indices;
    ASSERT_EQ(idx.size(), 12u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    EXPECT_LT(idx.back(), 37u);
  }
}

TEST(SampleBatch, StreamsDiffer) {
  auto a = smb::sample_batch(7, RngStream::kPrimary, 0, 1000, 16).indices;
  auto b = smb::sample_batch(7, RngStream::kIndependent, 0, 1000, 16).indices;
  EXPECT_NE(a, b);
}

TEST(SampleBatch, StatefulAdvancesCounter) {
  smb::RngState st{7, 0};
  auto a = smb::sample_batch(st, RngStream::kPrimary, 100, 16);
  EXPECT_EQ(st.counter, 1u);
  auto b = smb::sample_batch(st, RngStream::kPrimary, 100, 16);
  EXPECT_EQ(a.indices, draw(0));
  EXPECT_EQ(b.indices, draw(1));
}

TEST(SampleBatch, TooLargeBatch) {
  try {
    smb::sample_batch(7, RngStream::kPrimary, 0, 10, 11);
    FAIL();
  } catch (const smb::Error& e) {
    EXPECT_EQ(e.kind(), smb::ErrorKind::kInvalidBatchSize);
  }
  EXPECT_THROW(smb::sample_batch(7, RngStream::kPrimary, 0, 10, 0), smb::Error);
}

TEST(ParamGroups, Norms) {
  auto x = smb::make_param_groups({"a", "b"}, {{3.0}, {4.0, 0.0}});
  EXPECT_EQ(x.total_dim(), 3u);
  EXPECT_DOUBLE_EQ(x.squared_norm(), 25.0);
  auto y = x.zeros_like();
  EXPECT_TRUE(x.same_shape(y));
  y.axpy(2.0, x);
  EXPECT_DOUBLE_EQ(y.groups[1][0], 8.0);
  y.groups[0][0] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(y.all_finite());
  EXPECT_THROW(smb::make_param_groups({"a"}, {{1.0}, {2.0}}), smb::Error);
}

class BrokenOracle : public smb::StochasticOracle {
 public:
  std::size_t dataset_size() const override { return 1; }
  smb::EvalResult eval(const smb::ParamGroups& x, const Batch&) const override {
    smb::EvalResult r{1.0, x.zeros_like()};
    r.grads.groups[1][0] = std::nan("");
    return r;
  }
};

TEST(Evaluate, NonFiniteGradientNamesGroup) {
  BrokenOracle o;
  auto x = smb::make_param_groups({"W1", "b1"}, {{0.0}, {0.0}});
  try {
    smb::evaluate(o, x, smb::full_batch(1));
    FAIL();
  } catch (const smb::Error& e) {
    EXPECT_EQ(e.kind(), smb::ErrorKind::kNumericalOverflow);
    EXPECT_NE(std::string(e.what()).find("b1"), std::string::npos);
  }
}

TEST(Jacobi, TwoByTwo) {
  Eigen::MatrixXd b(2, 2);
  b << 3, -1, -1, 3;
  auto eig = smb::jacobi_eigen(b);
  EXPECT_TRUE(eig.converged);
  EXPECT_NEAR(eig.values[0], 2.0, 1e-14);
  EXPECT_NEAR(eig.values[1], 4.0, 1e-14);
  Eigen::MatrixXd recon = eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
  EXPECT_LT((recon - b).norm(), 1e-13);
}

TEST(Jacobi, MatchesEigenOnRandom) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(8, 8);
  a = (a + a.transpose()).eval();
  auto eig = smb::jacobi_eigen(a);
  Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
  EXPECT_LT((eig.values - ref).norm(), 1e-12);
}

TEST(Jacobi, RejectsNonSymmetric) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(smb::jacobi_eigen(a), smb::Error);
}

}  // namespace
