#pragma once

#include <Eigen/Core>

namespace smb {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column j pairs with values[j]
  int sweeps = 0;
  bool converged = false;
};

/// Cyclic Jacobi rotations on a symmetric matrix. Stops once the off-diagonal
/// Frobenius norm falls below `tol` times the matrix norm or after `max_sweeps`.
/// Throws kContractViolation for non-square or non-symmetric input.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-14, int max_sweeps = 64);

}  // namespace smb
