#include <Eigen/Dense>

#include "seeded_rng.hpp"
#include "smb/problems.hpp"

namespace smb {

QuadraticProblem::QuadraticProblem(Eigen::MatrixXd a, Eigen::VectorXd b, std::size_t samples, double noise,
                                   std::uint64_t seed, std::size_t groups)
    : a_(std::move(a)), b_(std::move(b)), samples_(samples) {
  const auto d = a_.rows();
  if (a_.cols() != d || b_.size() != d) throw Error(ErrorKind::kShapeMismatch, "A must be square and match b");
  if (samples_ < 1) throw Error(ErrorKind::kConfig, "samples: must be >= 1");
  if (groups < 1 || groups > static_cast<std::size_t>(d)) throw Error(ErrorKind::kConfig, "groups: must lie in [1, dim]");

  noise_ = RowMatrix::Zero(static_cast<Eigen::Index>(samples_), d);
  if (noise > 0.0) {
    detail::SeededRng rng(seed, RngStream::kData, 10);
    for (Eigen::Index i = 0; i < noise_.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) noise_(i, j) = noise * rng.normal();
    }
    const Eigen::RowVectorXd mean = noise_.colwise().mean();
    noise_.rowwise() -= mean;
  }

  const std::size_t dim = static_cast<std::size_t>(d);
  for (std::size_t p = 0; p < groups; ++p) {
    group_sizes_.push_back(dim / groups + (p < dim % groups ? 1 : 0));
  }
  lipschitz_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

QuadraticProblem QuadraticProblem::with_spectrum(std::size_t dim, double mu, double L, std::size_t samples,
                                                 double noise, std::uint64_t seed, std::size_t groups) {
  if (dim < 1 || !(mu > 0.0) || !(L >= mu)) throw Error(ErrorKind::kConfig, "spectrum: need dim >= 1 and 0 < mu <= L");
  detail::SeededRng rng(seed, RngStream::kData, 11);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd gauss(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) gauss(i, j) = rng.normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
  Eigen::VectorXd spectrum(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    spectrum[i] = d > 1 ? mu + (L - mu) * static_cast<double>(i) / static_cast<double>(d - 1) : L;
  }
  Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose());
  Eigen::VectorXd b(d);
  for (Eigen::Index i = 0; i < d; ++i) b[i] = rng.normal();
  return QuadraticProblem(std::move(a), std::move(b), samples, noise, seed, groups);
}

ParamGroups QuadraticProblem::pack(const Eigen::VectorXd& v) const {
  ParamGroups x;
  Eigen::Index offset = 0;
  for (std::size_t p = 0; p < group_sizes_.size(); ++p) {
    x.names.push_back(group_sizes_.size() == 1 ? "x" : "x" + std::to_string(p));
    const auto n = static_cast<Eigen::Index>(group_sizes_[p]);
    x.groups.emplace_back(v.data() + offset, v.data() + offset + n);
    offset += n;
  }
  return x;
}

Eigen::VectorXd QuadraticProblem::unpack(const ParamGroups& x) const {
  Eigen::VectorXd v(a_.rows());
  Eigen::Index offset = 0;
  if (x.size() != group_sizes_.size()) throw Error(ErrorKind::kShapeMismatch, "quadratic: wrong group count");
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (x.groups[p].size() != group_sizes_[p]) throw Error(ErrorKind::kShapeMismatch, "quadratic: wrong group size");
    for (double value : x.groups[p]) v[offset++] = value;
  }
  return v;
}

Eigen::VectorXd QuadraticProblem::minimizer() const { return a_.ldlt().solve(b_); }

ParamGroups QuadraticProblem::initial_point(std::uint64_t seed) const {
  detail::SeededRng rng(seed, RngStream::kInit, 0);
  Eigen::VectorXd v(a_.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  return pack(v);
}

EvalResult QuadraticProblem::eval(const ParamGroups& x, const Batch& batch) const {
  const Eigen::VectorXd v = unpack(x);
  if (batch.indices.empty()) throw Error(ErrorKind::kShapeMismatch, "quadratic: empty batch");
  Eigen::RowVectorXd mean_noise = Eigen::RowVectorXd::Zero(a_.rows());
  for (std::size_t i : batch.indices) {
    if (i >= samples_) throw Error(ErrorKind::kShapeMismatch, "quadratic: sample index out of range");
    mean_noise += noise_.row(static_cast<Eigen::Index>(i));
  }
  mean_noise /= static_cast<double>(batch.indices.size());

  const Eigen::VectorXd av = a_ * v;
  EvalResult r;
  r.loss = 0.5 * v.dot(av) - b_.dot(v) + mean_noise.dot(v);
  r.grads = pack(av - b_ + mean_noise.transpose());
  return r;
}

}  // namespace smb
