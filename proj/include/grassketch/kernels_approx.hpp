#pragma once

#include <span>
#include <string_view>

#include "grassketch/kernels_exact.hpp"
#include "grassketch/sketch.hpp"
#include "grassketch/subspace.hpp"

namespace grassketch {

// All estimators are normalised by 1/m, so their expectations do not depend
// on the number of features.

/// (1/m) <R(P), R(Q)>; unbiased for sum cos^2(theta_i).
double kappa1_approx(const RealSketch& r1, const RealSketch& r2);

/// (1/m) <S(P), R(Q)>: binary stored sketch against a real query sketch.
double kappa2_approx(const BitSketch& s1, const RealSketch& r2);

/// Both sketch kinds of one subspace under one ensemble.
struct DualSketch {
  RealSketch real;
  BitSketch bits;

  static DualSketch from_real(RealSketch r);
};

/// ((1/m)<R(x), S(y)> + (1/m)<S(x), R(y)>) / 2. Symmetric in its arguments.
double kappa2_symmetrised(const DualSketch& x, const DualSketch& y);

/// (1/m) <S(P), S(Q)>, in [-1, 1].
double kappa3_approx(const BitSketch& s1, const BitSketch& s2);

enum class ExpectationKind {
  kappa1,            // sum cos^2
  kappa2_k1,         // (2/pi) cos^2, k = 1 only
  kappa2_general_a,  // c_k sqrt(2/pi) sum cos^2
  kappa2_general_b,  // (c_k sqrt(2/pi) / k) sum cos^2
  kappa3_k1,         // (2 theta / pi - 1)^2, k = 1 only
};

std::string_view to_string(ExpectationKind kind);

/// Closed-form expectation of an estimator at the given principal angles.
double expected_kappa(ExpectationKind kind, const PrincipalAngles& angles);

/// E||g|| for g ~ N(0, I_k): sqrt(2) Gamma((k+1)/2) / Gamma(k/2).
double c_k(int k);

/// Pairwise approximate kernel values. Variant approx_k2 is stored as given:
/// entry (i, j) is kappa2(S(i), R(j)).
GramMatrix approx_gram(std::span<const DualSketch> sketches, KernelName variant);
GramMatrix approx_gram(std::span<const RealSketch> sketches);  // k1
GramMatrix approx_gram(std::span<const BitSketch> sketches);   // k3

/// kappa2 for every (query, stored) pair straight from raw sketch values
/// (rows of rop_values): entry (q, s) = (1/m) sum_i sign(stored[s, i]) query[q, i].
Eigen::MatrixXd kappa2_block(const Eigen::Ref<const RowMatrix>& stored_values,
                             const Eigen::Ref<const RowMatrix>& query_values);

}  // namespace grassketch
