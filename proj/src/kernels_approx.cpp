#include "grassketch/kernels_approx.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "grassketch/errors.hpp"

namespace grassketch {
namespace {

double sum_cos2(const PrincipalAngles& angles) {
  double s = 0.0;
  for (double t : angles.theta) {
    const double c = std::cos(t);
    s += c * c;
  }
  return s;
}

void require_single_angle(const PrincipalAngles& angles, ExpectationKind kind) {
  if (angles.size() != 1) {
    throw DimensionError(std::string(to_string(kind)) + " is only defined for k = 1, got k = " +
                         std::to_string(angles.size()));
  }
}

template <class Sketch, class Fn>
GramMatrix pairwise(std::span<const Sketch> sketches, KernelName name, bool symmetric, Fn&& fn) {
  if (sketches.empty()) throw DimensionError("approx_gram: empty input");
  const auto n = static_cast<Eigen::Index>(sketches.size());
  GramMatrix g;
  g.kernel_name = name;
  g.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (symmetric && j > i) break;
      g.values(i, j) = fn(sketches[i], sketches[j]);
      if (symmetric) g.values(j, i) = g.values(i, j);
    }
  }
  return g;
}

}  // namespace

double kappa1_approx(const RealSketch& r1, const RealSketch& r2) {
  require_same_ensemble(r1.ensemble, r2.ensemble, "kappa1_approx");
  const Eigen::Map<const Eigen::VectorXd> a(r1.values.data(), r1.values.size());
  const Eigen::Map<const Eigen::VectorXd> b(r2.values.data(), r2.values.size());
  return a.dot(b) / static_cast<double>(r1.m());
}

double kappa2_approx(const BitSketch& s1, const RealSketch& r2) {
  require_same_ensemble(s1.ensemble, r2.ensemble, "kappa2_approx");
  const std::uint64_t m = r2.m();
  double pos = 0.0;
  double total = 0.0;
  for (std::uint64_t i = 0; i < m; ++i) {
    const double v = r2.values[i];
    total += v;
    if (s1.bit(i)) pos += v;
  }
  // sum_i (+-1)_i v_i = 2 * (sum over set bits) - sum v
  return (2.0 * pos - total) / static_cast<double>(m);
}

DualSketch DualSketch::from_real(RealSketch r) {
  BitSketch bits = binarize(r);
  return DualSketch{std::move(r), std::move(bits)};
}

double kappa2_symmetrised(const DualSketch& x, const DualSketch& y) {
  const double xy = kappa2_approx(y.bits, x.real);
  const double yx = kappa2_approx(x.bits, y.real);
  return (xy + yx) / 2.0;
}

double kappa3_approx(const BitSketch& s1, const BitSketch& s2) {
  return static_cast<double>(pm1_dot(s1, s2)) / static_cast<double>(s1.m());
}

std::string_view to_string(ExpectationKind kind) {
  switch (kind) {
    case ExpectationKind::kappa1: return "kappa1";
    case ExpectationKind::kappa2_k1: return "kappa2_k1";
    case ExpectationKind::kappa2_general_a: return "kappa2_general_a";
    case ExpectationKind::kappa2_general_b: return "kappa2_general_b";
    case ExpectationKind::kappa3_k1: return "kappa3_k1";
  }
  return "unknown";
}

double c_k(int k) {
  if (k < 1) throw DimensionError("c_k: k must be >= 1");
  return std::sqrt(2.0) * std::exp(std::lgamma((k + 1) / 2.0) - std::lgamma(k / 2.0));
}

double expected_kappa(ExpectationKind kind, const PrincipalAngles& angles) {
  using std::numbers::pi;
  if (angles.size() == 0) throw DimensionError("expected_kappa: no angles");
  const int k = static_cast<int>(angles.size());
  const double root_2_over_pi = std::sqrt(2.0 / pi);
  switch (kind) {
    case ExpectationKind::kappa1: return sum_cos2(angles);
    case ExpectationKind::kappa2_k1: {
      require_single_angle(angles, kind);
      const double c = std::cos(angles[0]);
      return 2.0 / pi * c * c;
    }
    case ExpectationKind::kappa2_general_a: return c_k(k) * root_2_over_pi * sum_cos2(angles);
    case ExpectationKind::kappa2_general_b: return c_k(k) * root_2_over_pi / k * sum_cos2(angles);
    case ExpectationKind::kappa3_k1: {
      require_single_angle(angles, kind);
      const double t = 2.0 * angles[0] / pi - 1.0;
      return t * t;
    }
  }
  throw std::logic_error("expected_kappa: unhandled kind");
}

GramMatrix approx_gram(std::span<const DualSketch> sketches, KernelName variant) {
  switch (variant) {
    case KernelName::approx_k1:
      return pairwise(sketches, variant, true,
                      [](const DualSketch& a, const DualSketch& b) { return kappa1_approx(a.real, b.real); });
    case KernelName::approx_k2:
      return pairwise(sketches, variant, false,
                      [](const DualSketch& a, const DualSketch& b) { return kappa2_approx(a.bits, b.real); });
    case KernelName::approx_k2sym:
      return pairwise(sketches, variant, true,
                      [](const DualSketch& a, const DualSketch& b) { return kappa2_symmetrised(a, b); });
    case KernelName::approx_k3:
      return pairwise(sketches, variant, true,
                      [](const DualSketch& a, const DualSketch& b) { return kappa3_approx(a.bits, b.bits); });
    default: throw ConfigError("approx_gram: " + std::string(to_string(variant)) + " is not an approximate kernel");
  }
}

GramMatrix approx_gram(std::span<const RealSketch> sketches) {
  return pairwise(sketches, KernelName::approx_k1, true, kappa1_approx);
}

GramMatrix approx_gram(std::span<const BitSketch> sketches) {
  return pairwise(sketches, KernelName::approx_k3, true, kappa3_approx);
}

Eigen::MatrixXd kappa2_block(const Eigen::Ref<const RowMatrix>& stored_values,
                             const Eigen::Ref<const RowMatrix>& query_values) {
  if (stored_values.cols() != query_values.cols()) throw EnsembleMismatch("kappa2_block: feature counts differ");
  const RowMatrix signs = stored_values.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  return (query_values * signs.transpose()) / static_cast<double>(stored_values.cols());
}

}  // namespace grassketch
