#include <cmath>

#include "seeded_rng.hpp"
#include "smb/problems.hpp"

namespace smb {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

}  // namespace

MlpProblem::MlpProblem(std::shared_ptr<const Dataset> data, std::vector<std::size_t> rows, std::size_t hidden)
    : data_(std::move(data)), rows_(std::move(rows)), hidden_(hidden) {
  if (!data_) throw Error(ErrorKind::kConfig, "mlp: missing dataset");
  if (rows_.empty()) throw Error(ErrorKind::kConfig, "mlp: empty training split");
  if (hidden_ < 1) throw Error(ErrorKind::kConfig, "width: must be >= 1");
  if (data_->num_classes < 2) throw Error(ErrorKind::kConfig, "mlp: need at least two classes");
  for (std::size_t r : rows_) {
    if (r >= data_->rows()) throw Error(ErrorKind::kShapeMismatch, "mlp: row index out of range");
  }
}

ParamGroups MlpProblem::zero_point() const {
  const std::size_t d = data_->dim();
  const auto c = static_cast<std::size_t>(data_->num_classes);
  return make_param_groups({"W1", "b1", "W2", "b2"},
                           {ParamVector(hidden_ * d, 0.0), ParamVector(hidden_, 0.0), ParamVector(c * hidden_, 0.0),
                            ParamVector(c, 0.0)});
}

ParamGroups MlpProblem::initial_point(std::uint64_t seed) const {
  ParamGroups x = zero_point();
  detail::SeededRng rng(seed, RngStream::kInit, 0);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(data_->dim()));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double bound = p < 2 ? bound1 : bound2;
    for (double& v : x.groups[p]) v = rng.uniform(-bound, bound);
  }
  return x;
}

void MlpProblem::check_shape(const ParamGroups& x) const {
  const std::size_t d = data_->dim();
  const auto c = static_cast<std::size_t>(data_->num_classes);
  if (x.size() != 4 || x.groups[0].size() != hidden_ * d || x.groups[1].size() != hidden_ ||
      x.groups[2].size() != c * hidden_ || x.groups[3].size() != c) {
    throw Error(ErrorKind::kShapeMismatch, "mlp: parameters do not match W1, b1, W2, b2 shapes");
  }
}

RowMatrix MlpProblem::logits(const ParamGroups& x, const RowMatrix& inputs, RowMatrix* hidden_pre) const {
  const auto d = static_cast<Eigen::Index>(data_->dim());
  const auto h = static_cast<Eigen::Index>(hidden_);
  const auto c = static_cast<Eigen::Index>(data_->num_classes);
  const ConstRowMap w1(x.groups[0].data(), h, d);
  const Eigen::Map<const Eigen::RowVectorXd> b1(x.groups[1].data(), h);
  const ConstRowMap w2(x.groups[2].data(), c, h);
  const Eigen::Map<const Eigen::RowVectorXd> b2(x.groups[3].data(), c);

  RowMatrix z1 = inputs * w1.transpose();
  z1.rowwise() += b1;
  RowMatrix a1 = z1.cwiseMax(0.0);
  RowMatrix z2 = a1 * w2.transpose();
  z2.rowwise() += b2;
  if (hidden_pre) *hidden_pre = std::move(z1);
  return z2;
}

EvalResult MlpProblem::eval(const ParamGroups& x, const Batch& batch) const {
  check_shape(x);
  if (batch.indices.empty()) throw Error(ErrorKind::kShapeMismatch, "mlp: empty batch");
  const auto d = static_cast<Eigen::Index>(data_->dim());
  const auto h = static_cast<Eigen::Index>(hidden_);
  const auto c = static_cast<Eigen::Index>(data_->num_classes);
  const auto m = static_cast<Eigen::Index>(batch.indices.size());

  RowMatrix inputs(m, d);
  std::vector<int> labels(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t idx = batch.indices[static_cast<std::size_t>(i)];
    if (idx >= rows_.size()) throw Error(ErrorKind::kShapeMismatch, "mlp: sample index out of range");
    inputs.row(i) = data_->features.row(static_cast<Eigen::Index>(rows_[idx]));
    labels[static_cast<std::size_t>(i)] = data_->labels[rows_[idx]];
  }

  RowMatrix z1;
  RowMatrix z2 = logits(x, inputs, &z1);
  if (!z2.allFinite()) throw Error(ErrorKind::kNumericalOverflow, "mlp: non-finite activations");

  // Softmax cross-entropy; dz2 = (softmax - onehot) / m.
  double loss = 0.0;
  RowMatrix dz2(m, c);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double shift = z2.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z2.row(i).array() - shift).exp();
    const double sum = e.sum();
    const int y = labels[static_cast<std::size_t>(i)];
    loss += std::log(sum) + shift - z2(i, y);
    dz2.row(i) = e / sum;
    dz2(i, y) -= 1.0;
  }
  dz2 /= static_cast<double>(m);

  EvalResult r;
  r.loss = loss / static_cast<double>(m);
  r.grads = x.zeros_like();
  const ConstRowMap w2(x.groups[2].data(), c, h);
  const RowMatrix a1 = z1.cwiseMax(0.0);

  RowMap(r.grads.groups[2].data(), c, h).noalias() = dz2.transpose() * a1;
  Eigen::Map<Eigen::RowVectorXd>(r.grads.groups[3].data(), c) = dz2.colwise().sum();
  RowMatrix dz1 = dz2 * w2;
  dz1.array() *= (z1.array() > 0.0).cast<double>();
  RowMap(r.grads.groups[0].data(), h, d).noalias() = dz1.transpose() * inputs;
  Eigen::Map<Eigen::RowVectorXd>(r.grads.groups[1].data(), h) = dz1.colwise().sum();
  return r;
}

std::vector<int> MlpProblem::predict(const ParamGroups& x, std::span<const std::size_t> rows) const {
  check_shape(x);
  const auto d = static_cast<Eigen::Index>(data_->dim());
  RowMatrix inputs(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    inputs.row(static_cast<Eigen::Index>(i)) = data_->features.row(static_cast<Eigen::Index>(rows[i]));
  }
  const RowMatrix z2 = logits(x, inputs, nullptr);
  std::vector<int> out(rows.size());
  for (Eigen::Index i = 0; i < z2.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < z2.cols(); ++k) {
      if (z2(i, k) > z2(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace smb
