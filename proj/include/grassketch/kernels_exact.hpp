#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "grassketch/subspace.hpp"

namespace grassketch {

enum class KernelName : std::uint8_t {
  projection,    // ||U^T V||_F^2 = sum cos^2(theta_i)
  binet_cauchy,  // det(U^T V)^2 = prod cos^2(theta_i)
  approx_k1,     // real / real sketches
  approx_k2,     // bits (row) / real (column) sketches; not symmetric
  approx_k2sym,
  approx_k3,     // bits / bits
};

std::string_view to_string(KernelName name);
KernelName kernel_name_from_string(std::string_view s);

struct GramMatrix {
  Eigen::MatrixXd values;
  KernelName kernel_name = KernelName::projection;
  std::vector<std::string> ids;  // optional; CSV export falls back to 0..N-1

  Eigen::Index size() const noexcept { return values.rows(); }
};

double projection_kernel(const Subspace& a, const Subspace& b);
double binet_cauchy_kernel(const Subspace& a, const Subspace& b);

double exact_kernel(KernelName name, const Subspace& a, const Subspace& b);

/// Pairwise exact kernel. Lower triangle is evaluated and mirrored.
GramMatrix gram_matrix(std::span<const Subspace> data, KernelName name);

/// Rectangular kernel block: rows index `queries`, columns index `reference`.
Eigen::MatrixXd cross_kernel(std::span<const Subspace> queries, std::span<const Subspace> reference, KernelName name);

// Binary format: "GRAM", u32 N, N*N float64 row-major (little-endian).
void write_gram(std::ostream& os, const GramMatrix& g);
GramMatrix read_gram(std::istream& is);
void write_gram_csv(std::ostream& os, const GramMatrix& g);

}  // namespace grassketch
