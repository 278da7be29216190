#include "smb/model_step.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "smb/jacobi.hpp"

namespace smb {

namespace {

struct GroupProducts {
  double gg = 0.0;  // ||g||^2
  double yy = 0.0;  // ||y||^2
  double gy = 0.0;  // g'y
  double g_norm = 0.0;
  double y_norm = 0.0;
};

void check_lengths(const GroupStepInputs& in) {
  if (in.g.size() != in.g_t.size()) {
    throw Error(ErrorKind::kShapeMismatch, "g and g_t differ in length");
  }
}

GroupProducts products(const GroupStepInputs& in) {
  GroupProducts p;
  for (std::size_t i = 0; i < in.g.size(); ++i) {
    const double g = in.g[i];
    const double y = in.g_t[i] - g;
    p.gg += g * g;
    p.yy += y * y;
    p.gy += g * y;
  }
  p.g_norm = std::sqrt(p.gg);
  p.y_norm = std::sqrt(p.yy);
  return p;
}

// sigma, beta and gamma of the quasi-Newton form. gamma is evaluated through
// its factorisation (||g||^2/eta)(2||g|| ||y|| + ||g||^2/eta), which is the
// same quantity as beta^2 - ||g||^2 ||y||^2 without the cancellation.
struct ScalingTerms {
  double sigma, beta, gamma;
};

ScalingTerms scaling_terms(const GroupProducts& p, double eta) {
  const double gg_eta = p.gg / eta;
  ScalingTerms t;
  t.sigma = p.g_norm * p.y_norm + gg_eta + p.gy;
  t.beta = t.sigma - p.gy;
  t.gamma = gg_eta * (2.0 * p.g_norm * p.y_norm + gg_eta);
  return t;
}

void check_alpha_eta(const GroupStepInputs& in) {
  if (!(in.alpha > 0.0)) throw Error(ErrorKind::kPrecondition, "alpha must be positive");
  if (!(in.eta > 0.0 && in.eta < 1.0 + 1e-15)) throw Error(ErrorKind::kPrecondition, "eta must lie in (0, 1)");
}

}  // namespace

bool is_degenerate_gradient(std::span<const double> g, double x_norm) {
  return norm(g) < kZeroGradientGuard * std::max(1.0, x_norm);
}

std::optional<ModelStepCoefficients> compute_coefficients(const GroupStepInputs& in) {
  check_lengths(in);
  check_alpha_eta(in);
  const GroupProducts p = products(in);
  if (p.g_norm < kZeroGradientGuard * std::max(1.0, in.x_norm)) return std::nullopt;

  // Trial-step quantities with s_t = -alpha g.
  const double st_norm = in.alpha * p.g_norm;
  const double st_sq = st_norm * st_norm;
  const double y_st = -in.alpha * p.gy;
  const double st_g = -in.alpha * p.gg;

  ModelStepCoefficients c;
  c.delta = 0.5 * (st_norm * (p.y_norm + p.g_norm / in.eta) - y_st);
  // theta = (y's_t + 2 delta)^2 - ||s_t||^2 ||y||^2 as a difference of squares;
  // (y's_t + 2 delta) - ||s_t|| ||y|| = ||s_t|| ||g|| / eta exactly.
  const double a = y_st + 2.0 * c.delta;
  const double b = st_norm * p.y_norm;
  c.theta = (st_norm * p.g_norm / in.eta) * (a + b);

  const ScalingTerms t = scaling_terms(p, in.eta);
  c.sigma = t.sigma;
  c.beta = t.beta;
  c.gamma = t.gamma;
  // gamma > 0 follows from its factorisation whenever g != 0.
  assert(c.gamma > 0.0 && c.delta > 0.0);

  c.c_g = -st_sq / (2.0 * c.delta);
  const double scale = -st_sq / (2.0 * c.delta * c.theta);
  c.c_y = scale * (-a * st_g + st_sq * p.gy);
  c.c_s = scale * (-a * p.gy + p.yy * st_g);
  return c;
}

ModelStepResult model_step(const GroupStepInputs& in) {
  ModelStepResult r;
  r.step.assign(in.g.size(), 0.0);
  r.coefficients = compute_coefficients(in);
  if (!r.coefficients) {
    r.degenerate = true;
    return r;
  }
  const ModelStepCoefficients& c = *r.coefficients;
  for (std::size_t i = 0; i < in.g.size(); ++i) {
    const double g = in.g[i];
    const double y = in.g_t[i] - g;
    const double st = -in.alpha * g;
    r.step[i] = c.c_g * g + c.c_y * y + c.c_s * st;
  }
  return r;
}

ModelStepResult apply_scaling(const GroupStepInputs& model, std::span<const double> v) {
  check_lengths(model);
  check_alpha_eta(model);
  if (v.size() != model.g.size()) throw Error(ErrorKind::kShapeMismatch, "vector and model differ in length");
  ModelStepResult r;
  r.step.assign(v.size(), 0.0);
  const GroupProducts p = products(model);
  if (p.g_norm < kZeroGradientGuard * std::max(1.0, model.x_norm)) {
    r.degenerate = true;
    return r;
  }
  const ScalingTerms t = scaling_terms(p, model.eta);

  double gv = 0.0;
  double yv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    gv += model.g[i] * v[i];
    yv += (model.g_t[i] - model.g[i]) * v[i];
  }
  // H v = (||g||^2 / (sigma gamma)) [gamma v + (beta g'v + ||g||^2 y'v) y + (beta y'v + ||y||^2 g'v) g]
  const double lead = -model.alpha * p.gg / (t.sigma * t.gamma);
  const double cy = t.beta * gv + p.gg * yv;
  const double cg = t.beta * yv + p.yy * gv;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double g = model.g[i];
    const double y = model.g_t[i] - g;
    r.step[i] = lead * (t.gamma * v[i] + cy * y + cg * g);
  }
  return r;
}

namespace {

struct DenseInputs {
  Eigen::VectorXd g, y;
  double gg, yy, gy;
};

DenseInputs dense_inputs(const GroupStepInputs& in, std::size_t cap) {
  check_lengths(in);
  if (in.g.size() > cap) {
    throw Error(ErrorKind::kOracleTooLarge,
                "dense oracle dimension " + std::to_string(in.g.size()) + " exceeds cap " + std::to_string(cap));
  }
  if (!(in.eta > 0.0)) throw Error(ErrorKind::kPrecondition, "eta must be positive");
  const auto n = static_cast<Eigen::Index>(in.g.size());
  DenseInputs d;
  d.g = Eigen::Map<const Eigen::VectorXd>(in.g.data(), n);
  d.y = Eigen::Map<const Eigen::VectorXd>(in.g_t.data(), n) - d.g;
  d.gg = d.g.squaredNorm();
  d.yy = d.y.squaredNorm();
  d.gy = d.g.dot(d.y);
  if (d.gg == 0.0) throw Error(ErrorKind::kDegenerateGradient, "dense oracle needs g != 0");
  return d;
}

}  // namespace

DenseScalingMatrix build_dense_H(const GroupStepInputs& in, std::size_t cap) {
  const DenseInputs d = dense_inputs(in, cap);
  const auto n = d.g.size();
  // Written out term by term, independent of the coefficient path.
  const double sigma = std::sqrt(d.gg) * std::sqrt(d.yy) + d.gg / in.eta + d.gy;
  const double beta = sigma - d.gy;
  const double gamma = beta * beta - d.gg * d.yy;
  DenseScalingMatrix h = gamma * Eigen::MatrixXd::Identity(n, n);
  h += beta * d.y * d.g.transpose();
  h += d.gg * d.y * d.y.transpose();
  h += beta * d.g * d.y.transpose();
  h += d.yy * d.g * d.g.transpose();
  h *= d.gg / (sigma * gamma);
  return h;
}

DenseScalingMatrix build_dense_B(const GroupStepInputs& in, std::size_t cap) {
  const DenseInputs d = dense_inputs(in, cap);
  const auto n = d.g.size();
  const double sigma = std::sqrt(d.gg) * std::sqrt(d.yy) + d.gg / in.eta + d.gy;
  DenseScalingMatrix b = sigma * Eigen::MatrixXd::Identity(n, n);
  b -= d.g * d.y.transpose();
  b -= d.y * d.g.transpose();
  b /= d.gg;
  return b;
}

EigenExtremes eigen_extremes(const DenseScalingMatrix& b) {
  const SymmetricEigen e = jacobi_eigen(b);
  if (!e.converged) throw Error(ErrorKind::kContractViolation, "Jacobi iteration did not converge");
  return {e.values[0], e.values[e.values.size() - 1]};
}

double evaluate_quadratic_model(const GroupStepInputs& in, double f, double f_t, std::span<const double> s) {
  check_lengths(in);
  if (s.size() != in.g.size()) throw Error(ErrorKind::kShapeMismatch, "s and g differ in length");
  double st_sq = 0.0;
  double s_st = 0.0;
  double gs = 0.0;
  double gt_u = 0.0;  // g_t'(s - s_t)
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double st = -in.alpha * in.g[i];
    st_sq += st * st;
    s_st += s[i] * st;
    gs += in.g[i] * s[i];
    gt_u += in.g_t[i] * (s[i] - st);
  }
  if (!(st_sq > 0.0)) throw Error(ErrorKind::kPrecondition, "trial step must be nonzero");
  const double w0 = (st_sq - s_st) / st_sq;  // (s - s_t)'(-s_t) / ||s_t||^2
  const double wt = s_st / st_sq;
  return w0 * (f + gs) + wt * (f_t + gt_u);
}

bool check_trust_region(std::span<const double> s, std::span<const double> s_t) {
  if (s.size() != s_t.size()) throw Error(ErrorKind::kShapeMismatch, "s and s_t differ in length");
  double ss = 0.0, dd = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ss += s[i] * s[i];
    dd += (s[i] - s_t[i]) * (s[i] - s_t[i]);
    tt += s_t[i] * s_t[i];
  }
  return ss + dd <= tt + 1e-12;
}

}  // namespace smb
