#include "grassketch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "grassketch/errors.hpp"

namespace grassketch {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  const auto k = a.cols();
  if (k < 1 || k > n) throw DimensionError("orthonormalize: need 1 <= k <= n");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

JacobiResult jacobi_singular_values(const Eigen::MatrixXd& m, double tol, int max_sweeps) {
  Eigen::MatrixXd w = m;
  const auto cols = w.cols();
  JacobiResult out;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < cols; ++p) {
      for (Eigen::Index q = p + 1; q < cols; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;

        rotated = true;
        // Rotation that zeroes the (p,q) entry of W^T W.
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
      }
    }
    out.sweeps = sweep + 1;
    if (!rotated) {
      out.converged = true;
      break;
    }
  }

  out.singular_values.resize(cols);
  for (Eigen::Index j = 0; j < cols; ++j) out.singular_values(j) = w.col(j).norm();
  std::sort(out.singular_values.data(), out.singular_values.data() + cols, std::greater<>());
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols() || symmetric.rows() == 0) {
    throw DimensionError("min_eigenvalue: matrix must be square and nonempty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double orthonormality_defect(const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd g = u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols());
  return g.cwiseAbs().maxCoeff();
}

}  // namespace grassketch
