#include <cmath>

#include "smb/problems.hpp"

namespace smb {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogisticProblem::LogisticProblem(std::shared_ptr<const Dataset> data, std::vector<std::size_t> rows, double l2)
    : data_(std::move(data)), rows_(std::move(rows)), l2_(l2) {
  if (!data_) throw Error(ErrorKind::kConfig, "logistic: missing dataset");
  if (rows_.empty()) throw Error(ErrorKind::kConfig, "logistic: empty training split");
  if (l2_ < 0.0) throw Error(ErrorKind::kConfig, "l2: must be >= 0");
  for (std::size_t r : rows_) {
    if (r >= data_->rows()) throw Error(ErrorKind::kShapeMismatch, "logistic: row index out of range");
    const int y = data_->labels[r];
    if (y != 0 && y != 1) throw Error(ErrorKind::kConfig, "logistic: labels must be 0 or 1");
  }
  if (!data_->features.allFinite()) throw Error(ErrorKind::kConfig, "logistic: non-finite features");
}

ParamGroups LogisticProblem::initial_point() const {
  return make_param_groups({"w"}, {ParamVector(data_->dim(), 0.0)});
}

EvalResult LogisticProblem::eval(const ParamGroups& x, const Batch& batch) const {
  const std::size_t d = data_->dim();
  if (x.size() != 1 || x.groups[0].size() != d) throw Error(ErrorKind::kShapeMismatch, "logistic: expected one group of size d");
  if (batch.indices.empty()) throw Error(ErrorKind::kShapeMismatch, "logistic: empty batch");
  const Eigen::Map<const Eigen::VectorXd> w(x.groups[0].data(), static_cast<Eigen::Index>(d));

  EvalResult r;
  r.grads = x.zeros_like();
  Eigen::Map<Eigen::VectorXd> grad(r.grads.groups[0].data(), static_cast<Eigen::Index>(d));
  double loss = 0.0;
  for (std::size_t i : batch.indices) {
    if (i >= rows_.size()) throw Error(ErrorKind::kShapeMismatch, "logistic: sample index out of range");
    const std::size_t row = rows_[i];
    const auto xi = data_->features.row(static_cast<Eigen::Index>(row));
    const double z = xi.dot(w);
    const double y = data_->labels[row];
    loss += softplus(z) - y * z;
    grad += (sigmoid(z) - y) * xi.transpose();
  }
  const double m = static_cast<double>(batch.indices.size());
  r.loss = loss / m + 0.5 * l2_ * w.squaredNorm();
  grad = grad / m + l2_ * w;
  return r;
}

std::vector<int> LogisticProblem::predict(const ParamGroups& x, std::span<const std::size_t> rows) const {
  const std::size_t d = data_->dim();
  if (x.size() != 1 || x.groups[0].size() != d) throw Error(ErrorKind::kShapeMismatch, "logistic: expected one group of size d");
  const Eigen::Map<const Eigen::VectorXd> w(x.groups[0].data(), static_cast<Eigen::Index>(d));
  std::vector<int> out;
  out.reserve(rows.size());
  // Class 1 only on a strict win; a tie goes to class 0.
  for (std::size_t r : rows) out.push_back(data_->features.row(static_cast<Eigen::Index>(r)).dot(w) > 0.0 ? 1 : 0);
  return out;
}

}  // namespace smb
