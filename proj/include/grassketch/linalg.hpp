#pragma once

#include <Eigen/Dense>

namespace grassketch {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Thin Q factor of a Householder QR of `a` (n x k, k <= n), with columns
/// flipped so that the diagonal of R is nonnegative. The sign fix makes the
/// result a deterministic function of `a`.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a);

struct JacobiResult {
  Eigen::VectorXd singular_values;  // descending
  int sweeps = 0;
  bool converged = false;
};

/// Singular values of a small square or tall matrix by one-sided (Hestenes)
/// Jacobi rotations. A column pair is rotated while its normalised inner
/// product exceeds `tol`; iteration stops after a sweep with no rotation.
JacobiResult jacobi_singular_values(const Eigen::MatrixXd& m, double tol = 1e-12, int max_sweeps = 100);

/// Smallest eigenvalue of a symmetric matrix (only the lower triangle is read).
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Largest absolute entry of U^T U - I.
double orthonormality_defect(const Eigen::MatrixXd& u);

}  // namespace grassketch
