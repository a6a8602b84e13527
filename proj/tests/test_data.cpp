#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "grassketch/data.hpp"
#include "grassketch/errors.hpp"
#include "oracles.hpp"

using namespace grassketch;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("grassketch_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

GrayImage image_from(const Eigen::VectorXd& v, int side) {
  return {side, side, std::vector<double>(v.data(), v.data() + v.size())};
}

// Largest principal angle from its sine, ||(I - A A^T) B||_2, which stays accurate near 0.
double max_angle(const Subspace& a, const Subspace& b) {
  const Eigen::MatrixXd residual = b.basis() - a.basis() * (a.basis().transpose() * b.basis());
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0);
  return std::asin(std::min(s, 1.0));
}

int nearest_subspace_accuracy_hits(const SplitDataset& d) {
  int hits = 0;
  for (std::size_t i = 0; i < d.test.size(); ++i)
    hits += nearest_subspace_classify(d.train, d.test.samples[i], projection_kernel) == d.test.labels[i];
  return hits;
}

long rss_kb() {
  std::ifstream is("/proc/self/status");
  for (std::string line; std::getline(is, line);)
    if (line.rfind("VmRSS:", 0) == 0) return std::stol(line.substr(6));
  return -1;
}

}  // namespace

TEST_CASE("synth_benchmark with sigma 0 repeats the class base") {
  const auto d = synth_benchmark({4, 3, 3, 20, 3, 0.0, 11});
  CHECK(d.train.size() == 12);
  CHECK(d.test.size() == 12);
  CHECK(d.train.class_count == 4);
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    const auto& same = d.train.samples[d.test.labels[i] * 3];
    CHECK(max_angle(same, d.test.samples[i]) < 1e-7);
  }
  CHECK(nearest_subspace_accuracy_hits(d) == 12);
}

TEST_CASE("synth_benchmark defaults beat the random baseline") {
  const auto d = synth_benchmark({});
  CHECK(d.train.size() == 160);
  CHECK(d.test.size() == 160);
  CHECK(d.train.samples.front().n() == 256);
  CHECK(d.train.samples.front().k() == 5);
  d.train.validate();
  CHECK(nearest_subspace_accuracy_hits(d) / 160.0 > 0.125);
}

TEST_CASE("synth_benchmark at G(9, 1024) with 400 samples stays under 100 MB") {
  const long before = rss_kb();
  const auto d = synth_benchmark({8, 25, 25, 1024, 9, 0.1, 2});
  const long after = rss_kb();
  std::size_t bytes = 0;
  for (const auto* ds : {&d.train, &d.test})
    for (const auto& s : ds->samples) bytes += static_cast<std::size_t>(s.basis().size()) * sizeof(double);
  CHECK(d.train.size() + d.test.size() == 400);
  CHECK(bytes == 400u * 1024u * 9u * 8u);
  CHECK(bytes < 100u * 1024u * 1024u);
  if (before > 0 && after > 0) CHECK((after - before) * 1024 < 100l * 1024 * 1024);
}

TEST_CASE("synth_benchmark is deterministic and validates input") {
  const SyntheticSpec spec{3, 2, 2, 12, 2, 0.3, 5};
  const auto a = synth_benchmark(spec), b = synth_benchmark(spec);
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train.samples[i].basis() == b.train.samples[i].basis());
  CHECK_FALSE(a.train.samples[0].basis() == a.test.samples[0].basis());
  CHECK_THROWS_AS(synth_benchmark({0, 1, 1, 4, 1, 0.1, 0}), DimensionError);
  CHECK_THROWS_AS(synth_benchmark({2, 1, 1, 4, 5, 0.1, 0}), DimensionError);
  CHECK_THROWS_AS(synth_benchmark({2, 1, 1, 4, 0, 0.1, 0}), DimensionError);
}

TEST_CASE("imageset_to_subspace recovers orthonormal images exactly") {
  const auto truth = random_subspace(64, 4, 3);
  std::vector<GrayImage> imgs;
  for (int j = 0; j < 4; ++j) imgs.push_back(image_from(truth.basis().col(j), 8));
  const auto s = imageset_to_subspace(imgs, 8, 4);
  CHECK(s.n() == 64);
  CHECK(max_angle(s, truth) < 1e-8);
  CHECK((s.basis().transpose() * s.basis() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a duplicated image gives its normalised vector") {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(25, 0.1, 0.9);
  const std::vector<GrayImage> imgs{image_from(v, 5), image_from(v, 5)};
  const auto s = imageset_to_subspace(imgs, 5, 1);
  const Eigen::VectorXd u = s.basis().col(0);
  CHECK(std::abs(std::abs(u.dot(v.normalized())) - 1.0) < 1e-12);
}

TEST_CASE("noisy rank-9 image stacks recover the true 9-space") {
  const int side = 16, rank = 9;
  const auto truth = random_subspace(side * side, rank, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 40; ++i) {
    Eigen::VectorXd coeff(rank);
    for (auto& c : coeff) c = g(rng);
    Eigen::VectorXd v = truth.basis() * coeff;
    for (auto& p : v) p += 1e-3 * g(rng);
    imgs.push_back(image_from(v, side));
  }
  const auto s = imageset_to_subspace(imgs, side, rank);
  CHECK(max_angle(s, truth) < 0.05);

  SUBCASE("input order does not change the span") {
    auto shuffled = imgs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(max_angle(s, imageset_to_subspace(shuffled, side, rank)) < 1e-8);
  }
  SUBCASE("more images than pixels uses the direct SVD") {
    std::vector<GrayImage> many;
    for (int rep = 0; rep < 8; ++rep) many.insert(many.end(), imgs.begin(), imgs.end());
    REQUIRE(many.size() > static_cast<std::size_t>(side * side));
    CHECK(max_angle(s, imageset_to_subspace(many, side, rank)) < 1e-8);
  }
}

TEST_CASE("imageset_to_subspace errors") {
  const std::vector<GrayImage> two{image_from(Eigen::VectorXd::Ones(4), 2), image_from(Eigen::VectorXd::Ones(4), 2)};
  CHECK_THROWS_AS(imageset_to_subspace(two, 2, 3), DataError);
  CHECK_THROWS_AS(imageset_to_subspace(two, 2, 2), DataError);  // rank 1 stack
  CHECK_THROWS_AS(imageset_to_subspace(two, 1, 2), DimensionError);
}

TEST_CASE("bilinear resize") {
  SUBCASE("same size is the identity") {
    GrayImage img{3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
    GrayImage sq{3, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}};
    CHECK(resize_bilinear(sq, 3) == sq.pixels);
    CHECK(resize_bilinear(img, 1).size() == 1);
  }
  SUBCASE("affine ramps are reproduced exactly at corner-aligned coordinates") {
    // Bilinear interpolation is exact on f(r, c) = a + b r + d c + e r c.
    const int w = 7, h = 5, side = 4;
    auto f = [](double r, double c) { return 0.2 + 0.03 * r + 0.05 * c + 0.004 * r * c; };
    GrayImage img{w, h, std::vector<double>(w * h)};
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) img.pixels[r * w + c] = f(r, c);
    const auto out = resize_bilinear(img, side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const double sr = r * (h - 1.0) / (side - 1.0), sc = c * (w - 1.0) / (side - 1.0);
        CHECK(out[r * side + c] == doctest::Approx(f(sr, sc)).epsilon(1e-12));
      }
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(resize_bilinear(GrayImage{2, 2, {0.0}}, 2), DataError);
    CHECK_THROWS_AS(resize_bilinear(GrayImage{1, 1, {0.0}}, 0), DimensionError);
  }
}

TEST_CASE("PGM reading") {
  TempDir tmp("pgm");
  SUBCASE("8-bit with comments") {
    write_bytes(tmp.path / "a.pgm", std::string("P5\n# made by hand\n2 1\n# max\n255\n") + '\x00' + '\xff');
    const auto img = read_pgm(tmp.path / "a.pgm");
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.pixels == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("16-bit big-endian") {
    write_bytes(tmp.path / "b.pgm", std::string("P5 1 2 1000\n") + '\x01' + '\xf4' + '\x03' + '\xe8');
    const auto img = read_pgm(tmp.path / "b.pgm");
    CHECK(img.pixels[0] == doctest::Approx(0.5));
    CHECK(img.pixels[1] == doctest::Approx(1.0));
  }
  SUBCASE("round trip through write_pgm") {
    GrayImage img{2, 2, {0.0, 1.0 / 255, 128.0 / 255, 1.0}};
    write_pgm(tmp.path / "c.pgm", img);
    const auto back = read_pgm(tmp.path / "c.pgm");
    for (int i = 0; i < 4; ++i) CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(read_pgm(tmp.path / "missing.pgm"), DataError);
    write_bytes(tmp.path / "ascii.pgm", "P2\n1 1\n255\n0\n");
    CHECK_THROWS_AS(read_pgm(tmp.path / "ascii.pgm"), FormatError);
    write_bytes(tmp.path / "short.pgm", std::string("P5\n2 2\n255\n") + "ab");
    CHECK_THROWS_AS(read_pgm(tmp.path / "short.pgm"), FormatError);
    write_bytes(tmp.path / "bad.pgm", "P5\n-3 2\n255\n");
    CHECK_THROWS_AS(read_pgm(tmp.path / "bad.pgm"), FormatError);
  }
}

TEST_CASE("manifests") {
  SUBCASE("empty entry list") {
    CHECK_THROWS_WITH_AS(parse_manifest(json{{"n", 4}, {"k", 1}, {"entries", json::array()}}), "empty manifest",
                         DataError);
  }
  SUBCASE("mixed n names both ids") {
    const json j = {{"n", 256},
                    {"k", 2},
                    {"entries",
                     {{{"id", "small"}, {"label", 0}, {"kind", "synthetic"}},
                      {{"id", "large"}, {"label", 1}, {"kind", "synthetic"}, {"n", 1024}}}}};
    try {
      parse_manifest(j);
      FAIL("expected an error");
    } catch (const DataError& e) {
      const std::string what = e.what();
      CHECK(what.find("small") != std::string::npos);
      CHECK(what.find("large") != std::string::npos);
    }
  }
  SUBCASE("valid 8-class synthetic manifest") {
    json entries = json::array();
    for (int c = 0; c < 8; ++c)
      for (int i = 0; i < 2; ++i)
        entries.push_back({{"id", "s" + std::to_string(c) + "_" + std::to_string(i)},
                           {"label", c},
                           {"kind", "synthetic"},
                           {"seed", 100 + 2 * c + i},
                           {"base_seed", c},
                           {"sigma", 0.1},
                           {"split", i == 0 ? "train" : "test"}});
    const auto m = parse_manifest({{"n", 16}, {"k", 2}, {"entries", entries}});
    const auto ds = materialise(m);
    CHECK(ds.class_count == 8);
    CHECK(ds.size() == 16);
    ds.validate();
    const auto split = materialise_split(m);
    CHECK(split.train.size() == 8);
    CHECK(split.test.size() == 8);
    CHECK(split.test.ids.front() == "s0_1");
    // JSON round trip.
    const auto again = parse_manifest(manifest_to_json(m));
    CHECK(materialise(again).samples[5].basis() == ds.samples[5].basis());
  }
  SUBCASE("duplicate ids, bad kind, bad split") {
    const json dup = {{"n", 4},
                      {"k", 1},
                      {"entries", {{{"id", "a"}, {"label", 0}, {"kind", "synthetic"}},
                                   {{"id", "a"}, {"label", 1}, {"kind", "synthetic"}}}}};
    CHECK_THROWS_AS(parse_manifest(dup), DataError);
    const json kind = {{"n", 4}, {"k", 1}, {"entries", {{{"id", "a"}, {"label", 0}, {"kind", "video"}}}}};
    CHECK_THROWS_AS(parse_manifest(kind), FormatError);
    const json split = {
        {"n", 4}, {"k", 1}, {"entries", {{{"id", "a"}, {"label", 0}, {"kind", "synthetic"}, {"split", "dev"}}}}};
    CHECK_THROWS_AS(parse_manifest(split), DataError);
    CHECK_THROWS_AS(parse_manifest(json{{"k", 1}}), FormatError);
  }
  SUBCASE("missing files") {
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), DataError);
    TempDir tmp("manifest");
    write_bytes(tmp.path / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_manifest(tmp.path / "broken.json"), FormatError);
    const json j = {{"n", 4}, {"k", 1}, {"entries", {{{"id", "cup_1"}, {"label", 0}, {"kind", "images"}, {"dir", "nope"}}}}};
    write_bytes(tmp.path / "m.json", j.dump());
    const auto m = load_manifest(tmp.path / "m.json");
    CHECK_THROWS_WITH_AS(materialise(m), doctest::Contains("cup_1"), DataError);
  }
}

TEST_CASE("image-set manifests end to end") {
  TempDir tmp("images");
  SyntheticImageSpec spec;
  spec.classes = 2;
  spec.train_sets_per_class = 2;
  spec.test_sets_per_class = 1;
  spec.images_per_set = 12;
  spec.side = 8;
  spec.rank = 3;
  spec.seed = 4;
  const auto written = write_synthetic_image_sets(tmp.path, spec);
  CHECK(written.k == 4);
  CHECK(written.n == 64);
  CHECK(written.entries.size() == 6);
  const auto m = load_manifest(tmp.path / "manifest.json");
  CHECK(m.entries[0].kind == EntryKind::images);
  const auto d = materialise_split(m);
  CHECK(d.train.size() == 4);
  CHECK(d.test.size() == 2);
  CHECK(d.train.samples[0].k() == 4);
  // Sets of the same class share most of their span.
  CHECK(projection_kernel(d.train.samples[0], d.train.samples[1]) > projection_kernel(d.train.samples[0], d.train.samples[2]));
}

TEST_CASE("dataset directories round trip bit-identically") {
  TempDir tmp("dataset");
  const auto d = synth_benchmark({3, 2, 2, 10, 2, 0.2, 8});
  save_dataset(tmp.path / "a", d);
  save_dataset(tmp.path / "b", synth_benchmark({3, 2, 2, 10, 2, 0.2, 8}));
  for (const auto& entry : fs::directory_iterator(tmp.path / "a"))
    CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / entry.path().filename()));
  const auto back = load_dataset(tmp.path / "a");
  CHECK(back.train.size() == d.train.size());
  CHECK(back.test.size() == d.test.size());
  CHECK(back.train.class_count == 3);
  CHECK(back.test.ids == d.test.ids);
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    CHECK(back.test.samples[i].basis() == d.test.samples[i].basis());
    CHECK(back.test.labels[i] == d.test.labels[i]);
  }
  CHECK_THROWS_AS(load_dataset(tmp.path / "missing"), DataError);
}
