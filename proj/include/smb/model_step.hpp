#pragma once

// Closed-form model step for one parameter group.
//
// Given the stochastic gradient g at x, the gradient g_t at the trial point
// x + s_t (s_t = -alpha * g) and y = g_t - g, the relaxed two-point quadratic
// model is minimised by
//
//   s = c_g * g + c_y * y + c_s * s_t
//
// which equals -alpha * H * g for the symmetric positive definite H returned by
// build_dense_H. The coefficient form costs O(dim); the dense matrices exist
// only to verify it.

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "smb/core.hpp"

namespace smb {

struct GroupStepInputs {
  std::span<const double> g;    // g_{k,p}
  std::span<const double> g_t;  // gradient at the trial point
  double alpha = 0.0;           // stepsize, > 0
  double eta = 0.8;             // contraction in (0, 1)
  double x_norm = 0.0;          // ||x_p||, scales the zero-gradient guard
};

struct ModelStepCoefficients {
  double delta = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double c_g = 0.0;
  double c_y = 0.0;
  double c_s = 0.0;
};

struct ModelStepResult {
  ParamVector step;
  std::optional<ModelStepCoefficients> coefficients;  // empty when degenerate
  bool degenerate = false;
};

using DenseScalingMatrix = Eigen::MatrixXd;

inline constexpr double kZeroGradientGuard = 1e-12;
inline constexpr std::size_t kDenseDimensionCap = 512;

/// True when ||g|| < 1e-12 * max(1, ||x||); such groups take a zero step.
bool is_degenerate_gradient(std::span<const double> g, double x_norm);

/// delta, theta, sigma, beta, gamma and the step coefficients. Empty when
/// the gradient is degenerate.
std::optional<ModelStepCoefficients> compute_coefficients(const GroupStepInputs& in);

/// s = c_g g + c_y y + c_s s_t. Satisfies ||s|| <= eta ||s_t||.
ModelStepResult model_step(const GroupStepInputs& in);

/// -alpha * H(g, y) * v in O(dim), with H built from `model`. Used when the
/// scaling comes from one batch and the gradient from another.
ModelStepResult apply_scaling(const GroupStepInputs& model, std::span<const double> v);

// Dense verification oracles. Throw kOracleTooLarge above `cap` and
// kDegenerateGradient when g = 0.
DenseScalingMatrix build_dense_H(const GroupStepInputs& in, std::size_t cap = kDenseDimensionCap);
DenseScalingMatrix build_dense_B(const GroupStepInputs& in, std::size_t cap = kDenseDimensionCap);

struct EigenExtremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Extreme eigenvalues by cyclic Jacobi. Throws kContractViolation if B is not
/// symmetric.
EigenExtremes eigen_extremes(const DenseScalingMatrix& b);

/// m(s) = a0(s) * (f + g's) + at(s) * (f_t + g_t'(s - s_t)),
/// a0(s) = (s - s_t)'(-s_t) / ||s_t||^2, at(s) = s's_t / ||s_t||^2.
double evaluate_quadratic_model(const GroupStepInputs& in, double f, double f_t,
                                std::span<const double> s);

/// ||s||^2 + ||s - s_t||^2 <= ||s_t||^2 (with 1e-12 slack).
bool check_trust_region(std::span<const double> s, std::span<const double> s_t);

}  // namespace smb
