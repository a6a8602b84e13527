#include "grassketch/kernels_exact.hpp"

#include <array>
#include <iomanip>
#include <limits>
#include <ostream>
#include <utility>

#include "grassketch/binary_io.hpp"
#include "grassketch/errors.hpp"

namespace grassketch {
namespace {

constexpr std::array<std::pair<KernelName, std::string_view>, 6> kNames{{
    {KernelName::projection, "projection"},
    {KernelName::binet_cauchy, "binet_cauchy"},
    {KernelName::approx_k1, "k1"},
    {KernelName::approx_k2, "k2"},
    {KernelName::approx_k2sym, "k2sym"},
    {KernelName::approx_k3, "k3"},
}};

void require_homogeneous(std::span<const Subspace> data, const char* what) {
  for (const auto& s : data) require_same_shape(data.front(), s, what);
}

}  // namespace

std::string_view to_string(KernelName name) {
  for (const auto& [k, s] : kNames)
    if (k == name) return s;
  return "unknown";
}

KernelName kernel_name_from_string(std::string_view s) {
  for (const auto& [k, name] : kNames)
    if (name == s) return k;
  throw ConfigError("unknown kernel name: " + std::string(s));
}

double projection_kernel(const Subspace& a, const Subspace& b) {
  require_same_shape(a, b, "projection_kernel");
  return (a.basis().transpose() * b.basis()).squaredNorm();
}

double binet_cauchy_kernel(const Subspace& a, const Subspace& b) {
  require_same_shape(a, b, "binet_cauchy_kernel");
  const Eigen::MatrixXd m = a.basis().transpose() * b.basis();
  const double det = Eigen::PartialPivLU<Eigen::MatrixXd>(m).determinant();
  return det * det;
}

double exact_kernel(KernelName name, const Subspace& a, const Subspace& b) {
  switch (name) {
    case KernelName::projection: return projection_kernel(a, b);
    case KernelName::binet_cauchy: return binet_cauchy_kernel(a, b);
    default: throw ConfigError("exact_kernel: " + std::string(to_string(name)) + " is not an exact kernel");
  }
}

GramMatrix gram_matrix(std::span<const Subspace> data, KernelName name) {
  if (data.empty()) throw DimensionError("gram_matrix: empty input");
  require_homogeneous(data, "gram_matrix");
  const auto n = static_cast<Eigen::Index>(data.size());
  GramMatrix g;
  g.kernel_name = name;
  g.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = exact_kernel(name, data[i], data[j]);
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd cross_kernel(std::span<const Subspace> queries, std::span<const Subspace> reference, KernelName name) {
  Eigen::MatrixXd out(queries.size(), reference.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t j = 0; j < reference.size(); ++j) out(i, j) = exact_kernel(name, queries[i], reference[j]);
  return out;
}

void write_gram(std::ostream& os, const GramMatrix& g) {
  io::write_magic(os, "GRAM");
  io::write_u32(os, static_cast<std::uint32_t>(g.size()));
  for (Eigen::Index i = 0; i < g.size(); ++i)
    for (Eigen::Index j = 0; j < g.size(); ++j) io::write_f64(os, g.values(i, j));
}

GramMatrix read_gram(std::istream& is) {
  io::expect_magic(is, "GRAM");
  const auto n = io::read_u32(is);
  if (n > (1u << 16)) throw FormatError("gram matrix too large");
  GramMatrix g;
  g.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g.values(i, j) = io::read_f64(is);
  return g;
}

void write_gram_csv(std::ostream& os, const GramMatrix& g) {
  const auto n = g.size();
  auto id = [&](Eigen::Index i) {
    return static_cast<std::size_t>(i) < g.ids.size() ? g.ids[i] : std::to_string(i);
  };
  os << "id";
  for (Eigen::Index j = 0; j < n; ++j) os << ',' << id(j);
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < n; ++i) {
    os << id(i);
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << g.values(i, j);
    os << '\n';
  }
}

}  // namespace grassketch
