#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace grassketch {

/// SplitMix64 finaliser. Bijective on 64-bit words; used both as a hash for
/// seed derivation and as the output function of SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a sequence of integer tags.
/// Distinct tag sequences give statistically independent child streams.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(parent + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t t : tags) {
    h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  }
  return h;
}

/// SplitMix64 generator. Small state, cheap to seed, so one instance per
/// sketch feature is affordable. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard normal variates by the Marsaglia polar method. Written out rather
/// than using std::normal_distribution, whose algorithm differs between
/// standard libraries; sketches must be reproducible from the seed alone.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) noexcept : bits_(seed) {}

  double operator()() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * bits_.uniform() - 1.0;
      v = 2.0 * bits_.uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  template <class It>
  void fill(It first, It last) noexcept {
    for (; first != last; ++first) *first = (*this)();
  }

 private:
  SplitMix64 bits_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace grassketch
