#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "smb/core.hpp"

namespace smb {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  RowMatrix features;           // one sample per row
  std::vector<int> labels;      // class index per row
  int num_classes = 0;
  std::vector<std::size_t> train;  // row indices
  std::vector<std::size_t> test;
  // "none", "pixel/255", "standardize(train)"; offsets/scales are per feature
  // and were applied to every row.
  std::string normalization = "none";
  std::vector<double> feature_offset;
  std::vector<double> feature_scale;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// IDX image file (magic 0x00000803) plus label file (0x00000801); gzip
/// compressed files are read transparently. Pixels are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
/// CSV with a header row; every column except `label_column` is a feature.
Dataset load_csv(const std::string& path, const std::string& label_column);
/// "label idx:value ..." lines with 1-based indices; dim = 0 infers it.
/// Labels -1/+1 map to 0/1.
Dataset load_libsvm(const std::string& path, std::size_t dim = 0);

/// Keeps the first n rows.
void take_subset(Dataset& ds, std::size_t n);
/// Seeded shuffle, then the last test_fraction of rows become the test split.
void split_train_test(Dataset& ds, double test_fraction, std::uint64_t seed);
/// Standardizes every feature with train-split statistics.
void standardize(Dataset& ds);

/// Two-class data from a planted logistic model; feature scales grow
/// geometrically from 1 to `max_scale` so the problem is ill-conditioned.
Dataset make_synthetic_logistic(std::size_t n, std::size_t d, std::uint64_t seed, double max_scale = 10.0);
/// Gaussian blobs, one per class.
Dataset make_synthetic_blobs(std::size_t n, std::size_t d, int classes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Problems

class Classifier {
 public:
  virtual ~Classifier() = default;
  /// argmax class per row, ties resolved toward the lowest class index.
  virtual std::vector<int> predict(const ParamGroups& x, std::span<const std::size_t> rows) const = 0;
  virtual const Dataset& dataset() const = 0;
};

/// Fraction of rows whose argmax prediction matches the label.
double accuracy(const Classifier& model, const ParamGroups& x, std::span<const std::size_t> rows);

/// f_i(x) = 1/2 x'Ax - b'x + e_i'x with perturbations e_i summing to zero, so
/// the full batch reproduces the exact gradient Ax - b.
class QuadraticProblem : public StochasticOracle {
 public:
  QuadraticProblem(Eigen::MatrixXd a, Eigen::VectorXd b, std::size_t samples = 1, double noise = 0.0,
                   std::uint64_t seed = 0, std::size_t groups = 1);

  /// A = Q diag(linspace(mu, L)) Q' with a seeded random orthogonal Q.
  static QuadraticProblem with_spectrum(std::size_t dim, double mu, double L, std::size_t samples,
                                        double noise, std::uint64_t seed, std::size_t groups = 1);

  std::size_t dataset_size() const override { return samples_; }
  EvalResult eval(const ParamGroups& x, const Batch& batch) const override;

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }
  /// Advertised Lipschitz constant (largest eigenvalue of A).
  double lipschitz() const { return lipschitz_; }
  Eigen::VectorXd minimizer() const;
  ParamGroups pack(const Eigen::VectorXd& v) const;
  Eigen::VectorXd unpack(const ParamGroups& x) const;
  ParamGroups initial_point(std::uint64_t seed) const;

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  RowMatrix noise_;  // samples x dim, zero column means
  std::size_t samples_;
  std::vector<std::size_t> group_sizes_;
  double lipschitz_ = 0.0;
};

/// Mean cross-entropy of a linear logistic model plus (l2/2)||w||^2. One
/// parameter group "w"; labels must be 0/1.
class LogisticProblem : public StochasticOracle, public Classifier {
 public:
  LogisticProblem(std::shared_ptr<const Dataset> data, std::vector<std::size_t> rows, double l2 = 0.0);

  std::size_t dataset_size() const override { return rows_.size(); }
  EvalResult eval(const ParamGroups& x, const Batch& batch) const override;
  std::vector<int> predict(const ParamGroups& x, std::span<const std::size_t> rows) const override;
  const Dataset& dataset() const override { return *data_; }

  ParamGroups initial_point() const;

 private:
  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> rows_;
  double l2_;
};

/// d -> hidden (ReLU) -> classes with softmax cross-entropy. Parameter groups
/// W1 (hidden x d, row-major), b1, W2 (classes x hidden), b2.
class MlpProblem : public StochasticOracle, public Classifier {
 public:
  MlpProblem(std::shared_ptr<const Dataset> data, std::vector<std::size_t> rows, std::size_t hidden);

  std::size_t dataset_size() const override { return rows_.size(); }
  EvalResult eval(const ParamGroups& x, const Batch& batch) const override;
  std::vector<int> predict(const ParamGroups& x, std::span<const std::size_t> rows) const override;
  const Dataset& dataset() const override { return *data_; }

  /// Weights and biases uniform in +-1/sqrt(fan_in).
  ParamGroups initial_point(std::uint64_t seed) const;
  ParamGroups zero_point() const;

  std::size_t hidden() const { return hidden_; }

 private:
  void check_shape(const ParamGroups& x) const;
  RowMatrix logits(const ParamGroups& x, const RowMatrix& inputs, RowMatrix* hidden_pre) const;

  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> rows_;
  std::size_t hidden_;
};

/// Uniform double in [0, 1) from a 64-bit generator output.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace smb
