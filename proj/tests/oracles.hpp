#pragma once
// Reference computations written independently of the library code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "grassketch/sketch.hpp"
#include "grassketch/subspace.hpp"

namespace oracle {

/// Principal angles from Eigen's two-sided Jacobi SVD, ascending.
inline std::vector<double> principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    out.push_back(std::acos(std::min(1.0, svd.singularValues()(i))));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// <a b^T, U U^T> with the n x n projector formed explicitly.
inline double rop_value_naive(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd p = u * u.transpose();
  double s = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) s += a(r) * b(c) * p(r, c);
  return s;
}

/// Dot product of the +-1 expansions, one bit at a time.
inline std::int64_t pm1_dot_naive(const std::vector<std::uint64_t>& x, const std::vector<std::uint64_t>& y,
                                  std::uint64_t m) {
  std::int64_t s = 0;
  for (std::uint64_t i = 0; i < m; ++i) {
    const int xi = ((x[i / 64] >> (i % 64)) & 1u) ? 1 : -1;
    const int yi = ((y[i / 64] >> (i % 64)) & 1u) ? 1 : -1;
    s += xi * yi;
  }
  return s;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Standard error of the mean with the n - 1 variance.
inline double standard_error(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline double variance(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return ss / static_cast<double>(v.size() - 1);
}

/// Haar-distributed orthogonal matrix from std::mt19937_64 (QR with sign fix).
inline Eigen::MatrixXd orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace oracle
