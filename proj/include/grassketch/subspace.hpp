#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace grassketch {

/// A point of the Grassmannian G(k, n), held as an n x k matrix with
/// orthonormal columns. The n x n projector U U^T is never formed.
class Subspace {
 public:
  /// Orthonormality is checked to `tol` (max abs entry of U^T U - I).
  explicit Subspace(Eigen::MatrixXd basis, double tol = 1e-10);

  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  int n() const noexcept { return static_cast<int>(basis_.rows()); }
  int k() const noexcept { return static_cast<int>(basis_.cols()); }

  friend bool operator==(const Subspace& a, const Subspace& b) { return a.basis_ == b.basis_; }

 private:
  Eigen::MatrixXd basis_;
};

/// Principal angles in radians, sorted ascending, each in [0, pi/2].
struct PrincipalAngles {
  std::vector<double> theta;

  std::size_t size() const noexcept { return theta.size(); }
  double operator[](std::size_t i) const { return theta[i]; }
};

/// Q factor (nonnegative-R convention) of an n x k standard Gaussian matrix drawn from `seed`.
Subspace random_subspace(int n, int k, std::uint64_t seed);

/// Re-orthonormalised base.basis() + sigma * G, G an n x k standard Gaussian matrix drawn from `seed`.
Subspace perturb_subspace(const Subspace& base, double sigma, std::uint64_t seed);

/// A pair (A, B) whose principal angles are exactly `angles` (up to
/// rounding), placed in R^n by a random rotation drawn from `seed`.
/// Requires n >= 2 * angles.size().
std::pair<Subspace, Subspace> subspace_pair_with_angles(int n, std::span<const double> angles, std::uint64_t seed);

/// Uniformly distributed n x n orthogonal matrix.
Eigen::MatrixXd random_rotation(int n, std::uint64_t seed);

/// R * A for an orthogonal n x n matrix R.
Subspace rotate(const Eigen::MatrixXd& rotation, const Subspace& a);

PrincipalAngles principal_angles(const Subspace& a, const Subspace& b);

/// sqrt(sum theta_i^2).
double geodesic_distance(const Subspace& a, const Subspace& b);

void require_same_shape(const Subspace& a, const Subspace& b, const char* what);

// Binary format: "GRSS", u16 version, u32 n, u32 k, n*k float64 column-major (little-endian).
inline constexpr std::uint16_t kSubspaceFormatVersion = 1;

void write_subspace(std::ostream& os, const Subspace& s);
Subspace read_subspace(std::istream& is);
void save_subspace(const std::filesystem::path& path, const Subspace& s);
Subspace load_subspace(const std::filesystem::path& path);

/// CSV with a header row u1..uk and one row per ambient coordinate.
void write_subspace_csv(std::ostream& os, const Subspace& s);

}  // namespace grassketch
