#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "grassketch/linalg.hpp"
#include "grassketch/subspace.hpp"

namespace grassketch {

/// Seed-only description of m Gaussian pairs (a_i, b_i) in R^n. The i-th pair
/// is drawn from its own generator seeded with hash(master_seed, i), so any
/// feature range can be regenerated independently of the others and of the
/// order of evaluation. The pairs are never stored.
struct RopEnsemble {
  std::uint64_t master_seed = 0;
  std::uint64_t m = 0;
  int n = 0;

  std::uint64_t id() const noexcept;
  std::uint64_t feature_seed(std::uint64_t i) const noexcept;

  /// Writes a_i then b_i; both spans must have length n.
  void draw(std::uint64_t i, std::span<double> a, std::span<double> b) const;

  friend bool operator==(const RopEnsemble&, const RopEnsemble&) = default;
};

struct RealSketch {
  RopEnsemble ensemble;
  int k = 0;
  std::vector<double> values;

  std::uint64_t m() const noexcept { return ensemble.m; }
  std::uint64_t ensemble_id() const noexcept { return ensemble.id(); }
};

/// Packed signs: bit i (word i / 64, position i % 64) is set iff value i >= 0.
/// Bits at positions >= m in the last word are zero.
struct BitSketch {
  RopEnsemble ensemble;
  int k = 0;
  std::vector<std::uint64_t> words;

  std::uint64_t m() const noexcept { return ensemble.m; }
  std::uint64_t ensemble_id() const noexcept { return ensemble.id(); }
  bool bit(std::uint64_t i) const noexcept { return (words[i >> 6] >> (i & 63)) & 1u; }
};

inline std::size_t word_count(std::uint64_t m) noexcept { return static_cast<std::size_t>((m + 63) / 64); }

/// values[i] = (a_i^T U)(U^T b_i).
RealSketch rop_sketch(const Subspace& u, const RopEnsemble& e);
BitSketch sign_sketch(const Subspace& u, const RopEnsemble& e);

/// Raw sketch values of many subspaces under one ensemble, one row per
/// subspace. Each Gaussian pair is generated once and applied to every
/// subspace through a blocked matrix product.
RowMatrix rop_values(std::span<const Subspace> us, const RopEnsemble& e);

std::vector<RealSketch> rop_sketch_batch(std::span<const Subspace> us, const RopEnsemble& e);

/// sign(0) := +1.
BitSketch binarize(const RealSketch& r);
BitSketch pack_signs(std::span<const double> values, const RopEnsemble& e, int k);

/// +1 / -1 expansion of the bits.
std::vector<double> pm1_expand(const BitSketch& s);

/// Dot product of the +-1 expansions: m - 2 * popcount(x XOR y).
std::int64_t pm1_dot(const BitSketch& x, const BitSketch& y);

/// Same on raw word arrays of equal length holding m valid bits.
std::int64_t pm1_dot_words(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y, std::uint64_t m) noexcept;

void require_same_ensemble(const RopEnsemble& a, const RopEnsemble& b, const char* what);

// File format (little-endian): "GSKT", u16 version, u8 kind (0 real, 1 bits),
// u64 m, u32 n, u32 k, u64 master_seed, then m float64 or ceil(m/64) u64.
inline constexpr std::uint16_t kSketchFormatVersion = 1;
inline constexpr std::size_t kSketchHeaderBytes = 4 + 2 + 1 + 8 + 4 + 4 + 8;

using AnySketch = std::variant<RealSketch, BitSketch>;

void write_sketch(std::ostream& os, const RealSketch& s);
void write_sketch(std::ostream& os, const BitSketch& s);
AnySketch read_sketch(std::istream& is);
void save_sketch(const std::filesystem::path& path, const AnySketch& s);
AnySketch load_sketch(const std::filesystem::path& path);

}  // namespace grassketch
