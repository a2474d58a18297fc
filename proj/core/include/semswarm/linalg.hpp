#pragma once

#include <Eigen/Dense>

namespace semswarm {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column i pairs with values[i]
  int sweeps = 0;
  bool converged = false;
};

/// Cyclic Jacobi rotations on a symmetric matrix. Stops when the off-diagonal
/// Frobenius norm falls to `tolerance` times the matrix norm, or after
/// `max_sweeps` sweeps. Only the upper triangle is read.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tolerance = 1e-12,
                            int max_sweeps = 100);

}  // namespace semswarm
