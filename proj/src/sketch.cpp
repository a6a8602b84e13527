#include "grassketch/sketch.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <string>

#include "grassketch/binary_io.hpp"
#include "grassketch/errors.hpp"
#include "grassketch/rng.hpp"

namespace grassketch {
namespace {

constexpr Eigen::Index kFeatureBlock = 256;

}  // namespace

std::uint64_t RopEnsemble::id() const noexcept {
  return derive_seed(master_seed, {m, static_cast<std::uint64_t>(n)});
}

std::uint64_t RopEnsemble::feature_seed(std::uint64_t i) const noexcept { return derive_seed(master_seed, {i}); }

void RopEnsemble::draw(std::uint64_t i, std::span<double> a, std::span<double> b) const {
  if (a.size() != static_cast<std::size_t>(n) || b.size() != static_cast<std::size_t>(n)) {
    throw DimensionError("RopEnsemble::draw: output spans must have length n");
  }
  GaussianStream g(feature_seed(i));
  g.fill(a.begin(), a.end());
  g.fill(b.begin(), b.end());
}

void require_same_ensemble(const RopEnsemble& a, const RopEnsemble& b, const char* what) {
  if (a.m != b.m) {
    throw EnsembleMismatch(std::string(what) + ": feature counts differ (" + std::to_string(a.m) + " vs " +
                           std::to_string(b.m) + ")");
  }
  if (a.id() != b.id()) throw EnsembleMismatch(std::string(what) + ": sketches come from different ensembles");
}

RowMatrix rop_values(std::span<const Subspace> us, const RopEnsemble& e) {
  if (e.n < 1) throw DimensionError("rop sketch: ensemble has n < 1");
  std::vector<Eigen::Index> offsets{0};
  for (const auto& u : us) {
    if (u.n() != e.n) {
      throw DimensionError("rop sketch: subspace lives in R^" + std::to_string(u.n()) + " but ensemble in R^" +
                           std::to_string(e.n));
    }
    offsets.push_back(offsets.back() + u.k());
  }

  const Eigen::Index count = static_cast<Eigen::Index>(us.size());
  const Eigen::Index n = e.n;
  Eigen::MatrixXd stacked(n, offsets.back());
  for (Eigen::Index j = 0; j < count; ++j) stacked.middleCols(offsets[j], us[j].k()) = us[j].basis();

  RowMatrix out(count, static_cast<Eigen::Index>(e.m));
  RowMatrix a_blk(kFeatureBlock, n);
  RowMatrix b_blk(kFeatureBlock, n);
  Eigen::MatrixXd a_proj;
  Eigen::MatrixXd b_proj;

  for (std::uint64_t f0 = 0; f0 < e.m; f0 += kFeatureBlock) {
    const Eigen::Index rows = static_cast<Eigen::Index>(std::min<std::uint64_t>(kFeatureBlock, e.m - f0));
    for (Eigen::Index r = 0; r < rows; ++r) {
      e.draw(f0 + r, {a_blk.row(r).data(), static_cast<std::size_t>(n)},
             {b_blk.row(r).data(), static_cast<std::size_t>(n)});
    }
    a_proj.noalias() = a_blk.topRows(rows) * stacked;
    b_proj.noalias() = b_blk.topRows(rows) * stacked;
    a_proj.array() *= b_proj.array();
    for (Eigen::Index j = 0; j < count; ++j) {
      out.row(j).segment(static_cast<Eigen::Index>(f0), rows) =
          a_proj.middleCols(offsets[j], offsets[j + 1] - offsets[j]).rowwise().sum().transpose();
    }
  }
  return out;
}

std::vector<RealSketch> rop_sketch_batch(std::span<const Subspace> us, const RopEnsemble& e) {
  const RowMatrix values = rop_values(us, e);
  std::vector<RealSketch> out;
  out.reserve(us.size());
  for (std::size_t j = 0; j < us.size(); ++j) {
    RealSketch s{e, us[j].k(), {}};
    s.values.assign(values.row(j).data(), values.row(j).data() + values.cols());
    out.push_back(std::move(s));
  }
  return out;
}

RealSketch rop_sketch(const Subspace& u, const RopEnsemble& e) {
  return std::move(rop_sketch_batch(std::span(&u, 1), e).front());
}

BitSketch pack_signs(std::span<const double> values, const RopEnsemble& e, int k) {
  if (values.size() != e.m) throw DimensionError("pack_signs: value count differs from ensemble m");
  BitSketch s{e, k, std::vector<std::uint64_t>(word_count(e.m), 0)};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= 0.0) s.words[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  return s;
}

BitSketch binarize(const RealSketch& r) { return pack_signs(r.values, r.ensemble, r.k); }

BitSketch sign_sketch(const Subspace& u, const RopEnsemble& e) { return binarize(rop_sketch(u, e)); }

std::vector<double> pm1_expand(const BitSketch& s) {
  std::vector<double> out(s.m());
  for (std::uint64_t i = 0; i < s.m(); ++i) out[i] = s.bit(i) ? 1.0 : -1.0;
  return out;
}

std::int64_t pm1_dot_words(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y,
                           std::uint64_t m) noexcept {
  std::int64_t differ = 0;
  const std::size_t words = std::min(x.size(), y.size());
  for (std::size_t w = 0; w < words; ++w) differ += std::popcount(x[w] ^ y[w]);
  return static_cast<std::int64_t>(m) - 2 * differ;
}

std::int64_t pm1_dot(const BitSketch& x, const BitSketch& y) {
  require_same_ensemble(x.ensemble, y.ensemble, "pm1_dot");
  if (x.words.size() != word_count(x.m()) || y.words.size() != word_count(y.m())) {
    throw DimensionError("pm1_dot: word count does not match m");
  }
  return pm1_dot_words(x.words, y.words, x.m());
}

namespace {

void write_sketch_header(std::ostream& os, std::uint8_t kind, const RopEnsemble& e, int k) {
  io::write_magic(os, "GSKT");
  io::write_u16(os, kSketchFormatVersion);
  io::write_u8(os, kind);
  io::write_u64(os, e.m);
  io::write_u32(os, static_cast<std::uint32_t>(e.n));
  io::write_u32(os, static_cast<std::uint32_t>(k));
  io::write_u64(os, e.master_seed);
}

}  // namespace

void write_sketch(std::ostream& os, const RealSketch& s) {
  write_sketch_header(os, 0, s.ensemble, s.k);
  for (double v : s.values) io::write_f64(os, v);
}

void write_sketch(std::ostream& os, const BitSketch& s) {
  write_sketch_header(os, 1, s.ensemble, s.k);
  for (auto w : s.words) io::write_u64(os, w);
}

AnySketch read_sketch(std::istream& is) {
  io::expect_magic(is, "GSKT");
  const auto version = io::read_u16(is);
  if (version != kSketchFormatVersion) throw FormatError("unsupported sketch format version " + std::to_string(version));
  const auto kind = io::read_u8(is);
  RopEnsemble e;
  e.m = io::read_u64(is);
  e.n = static_cast<int>(io::read_u32(is));
  const int k = static_cast<int>(io::read_u32(is));
  e.master_seed = io::read_u64(is);
  if (e.m > (std::uint64_t{1} << 34)) throw FormatError("sketch header: m too large");

  if (kind == 0) {
    RealSketch s{e, k, std::vector<double>(e.m)};
    for (auto& v : s.values) v = io::read_f64(is);
    return s;
  }
  if (kind == 1) {
    BitSketch s{e, k, std::vector<std::uint64_t>(word_count(e.m))};
    for (auto& w : s.words) w = io::read_u64(is);
    if (e.m % 64 != 0 && (s.words.back() >> (e.m % 64)) != 0) {
      throw FormatError("bit sketch has nonzero padding bits");
    }
    return s;
  }
  throw FormatError("unknown sketch kind " + std::to_string(kind));
}

void save_sketch(const std::filesystem::path& path, const AnySketch& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  std::visit([&](const auto& sk) { write_sketch(os, sk); }, s);
}

AnySketch load_sketch(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  return read_sketch(is);
}

}  // namespace grassketch
