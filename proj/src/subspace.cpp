#include "grassketch/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <string>

#include "grassketch/binary_io.hpp"
#include "grassketch/errors.hpp"
#include "grassketch/linalg.hpp"
#include "grassketch/rng.hpp"

namespace grassketch {
namespace {

constexpr double kSingularSlack = 1e-8;

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Eigen::MatrixXd g(rows, cols);
  GaussianStream gauss(seed);
  gauss.fill(g.data(), g.data() + g.size());
  return g;
}

void check_dims(int n, int k) {
  if (k < 1 || k > n) {
    throw DimensionError("invalid subspace dimensions: need 1 <= k <= n, got n=" + std::to_string(n) +
                         " k=" + std::to_string(k));
  }
}

}  // namespace

Subspace::Subspace(Eigen::MatrixXd basis, double tol) : basis_(std::move(basis)) {
  check_dims(static_cast<int>(basis_.rows()), static_cast<int>(basis_.cols()));
  if (!basis_.allFinite()) throw DimensionError("subspace basis has non-finite entries");
  const double defect = orthonormality_defect(basis_);
  if (!(defect <= tol)) {
    throw DimensionError("subspace basis is not orthonormal (defect " + std::to_string(defect) + ")");
  }
}

Subspace random_subspace(int n, int k, std::uint64_t seed) {
  check_dims(n, k);
  return Subspace(orthonormalize(gaussian_matrix(n, k, seed)));
}

Subspace perturb_subspace(const Subspace& base, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb_subspace: sigma must be nonnegative");
  Eigen::MatrixXd noisy = base.basis();
  if (sigma > 0.0) noisy += sigma * gaussian_matrix(base.n(), base.k(), seed);
  return Subspace(orthonormalize(noisy));
}

Eigen::MatrixXd random_rotation(int n, std::uint64_t seed) {
  check_dims(n, n);
  return orthonormalize(gaussian_matrix(n, n, seed));
}

Subspace rotate(const Eigen::MatrixXd& rotation, const Subspace& a) {
  if (rotation.rows() != a.n() || rotation.cols() != a.n()) {
    throw DimensionError("rotate: rotation must be n x n");
  }
  return Subspace(rotation * a.basis(), 1e-9);
}

std::pair<Subspace, Subspace> subspace_pair_with_angles(int n, std::span<const double> angles, std::uint64_t seed) {
  const int k = static_cast<int>(angles.size());
  if (k < 1 || 2 * k > n) throw DimensionError("subspace_pair_with_angles: need 1 <= k and 2k <= n");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, k);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < k; ++i) {
    a(i, i) = 1.0;
    b(i, i) = std::cos(angles[i]);
    b(k + i, i) = std::sin(angles[i]);
  }
  const Eigen::MatrixXd r = random_rotation(n, seed);
  return {Subspace(r * a, 1e-9), Subspace(r * b, 1e-9)};
}

void require_same_shape(const Subspace& a, const Subspace& b, const char* what) {
  if (a.n() != b.n() || a.k() != b.k()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.n()) + "x" +
                         std::to_string(a.k()) + " vs " + std::to_string(b.n()) + "x" + std::to_string(b.k()) +
                         ")");
  }
}

PrincipalAngles principal_angles(const Subspace& a, const Subspace& b) {
  require_same_shape(a, b, "principal_angles");
  const Eigen::MatrixXd m = a.basis().transpose() * b.basis();
  const JacobiResult cosines = jacobi_singular_values(m);
  // acos loses half the digits near 0, so small angles come from the sines:
  // the singular values of (I - A A^T) B, ascending where cosines descend.
  const Eigen::MatrixXd residual = b.basis() - a.basis() * m;
  JacobiResult sines = jacobi_singular_values(residual);
  std::reverse(sines.singular_values.begin(), sines.singular_values.end());

  PrincipalAngles out;
  out.theta.reserve(cosines.singular_values.size());
  for (Eigen::Index i = 0; i < cosines.singular_values.size(); ++i) {
    const double c = cosines.singular_values[i];
    if (c < -kSingularSlack || c > 1.0 + kSingularSlack) {
      throw std::logic_error("principal_angles: singular value " + std::to_string(c) + " outside [0,1]");
    }
    const double s = std::clamp(sines.singular_values[i], 0.0, 1.0);
    out.theta.push_back(c * c >= 0.5 ? std::asin(s) : std::acos(std::clamp(c, 0.0, 1.0)));
  }
  std::sort(out.theta.begin(), out.theta.end());
  return out;
}

double geodesic_distance(const Subspace& a, const Subspace& b) {
  double sum = 0.0;
  for (double t : principal_angles(a, b).theta) sum += t * t;
  return std::sqrt(sum);
}

void write_subspace(std::ostream& os, const Subspace& s) {
  io::write_magic(os, "GRSS");
  io::write_u16(os, kSubspaceFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(s.n()));
  io::write_u32(os, static_cast<std::uint32_t>(s.k()));
  const double* p = s.basis().data();
  for (Eigen::Index i = 0; i < s.basis().size(); ++i) io::write_f64(os, p[i]);
}

Subspace read_subspace(std::istream& is) {
  io::expect_magic(is, "GRSS");
  const auto version = io::read_u16(is);
  if (version != kSubspaceFormatVersion) throw FormatError("unsupported subspace format version " + std::to_string(version));
  const auto n = io::read_u32(is);
  const auto k = io::read_u32(is);
  if (k < 1 || k > n || n > (1u << 24)) throw FormatError("subspace header has invalid dimensions");
  Eigen::MatrixXd basis(n, k);
  double* p = basis.data();
  for (Eigen::Index i = 0; i < basis.size(); ++i) p[i] = io::read_f64(is);
  return Subspace(std::move(basis));
}

void save_subspace(const std::filesystem::path& path, const Subspace& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  write_subspace(os, s);
}

Subspace load_subspace(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  return read_subspace(is);
}

void write_subspace_csv(std::ostream& os, const Subspace& s) {
  for (int j = 0; j < s.k(); ++j) os << (j ? "," : "") << "u" << (j + 1);
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < s.n(); ++i) {
    for (int j = 0; j < s.k(); ++j) os << (j ? "," : "") << s.basis()(i, j);
    os << '\n';
  }
}

}  // namespace grassketch
