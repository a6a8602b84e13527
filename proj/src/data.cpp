#include "grassketch/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "grassketch/errors.hpp"
#include "grassketch/linalg.hpp"
#include "grassketch/rng.hpp"

namespace grassketch {
namespace fs = std::filesystem;
using nlohmann::json;

// ---- synthetic benchmark ----------------------------------------------------

SplitDataset synth_benchmark(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.per_class_train < 1 || spec.per_class_test < 1) {
    throw DimensionError("synth_benchmark: class and sample counts must be >= 1");
  }
  if (spec.k < 1 || spec.k > spec.n) throw DimensionError("synth_benchmark: need 1 <= k <= n");
  if (!(spec.sigma >= 0.0)) throw DimensionError("synth_benchmark: sigma must be nonnegative");

  SplitDataset out;
  out.train.class_count = out.test.class_count = spec.classes;
  for (int c = 0; c < spec.classes; ++c) {
    const auto cls = static_cast<std::uint64_t>(c);
    const Subspace base = random_subspace(spec.n, spec.k, derive_seed(spec.seed, {0, cls}));
    auto fill = [&](SubspaceDataset& ds, int count, std::uint64_t split, const char* tag) {
      for (int i = 0; i < count; ++i) {
        const auto seed = derive_seed(spec.seed, {1 + split, cls, static_cast<std::uint64_t>(i)});
        ds.samples.push_back(perturb_subspace(base, spec.sigma, seed));
        ds.labels.push_back(c);
        ds.ids.push_back(std::string(tag) + "_c" + std::to_string(c) + "_" + std::to_string(i));
      }
    };
    fill(out.train, spec.per_class_train, 0, "train");
    fill(out.test, spec.per_class_test, 1, "test");
  }
  return out;
}

// ---- images -----------------------------------------------------------------

namespace {

std::string next_pgm_token(std::istream& is) {
  std::string tok;
  char ch;
  while (is.get(ch)) {
    if (ch == '#') {
      std::string comment;
      std::getline(is, comment);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int parse_positive(const std::string& tok, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("unreadable image " + path.string() + ": bad PGM header field '" + tok + "'");
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("unreadable image " + path.string() + ": cannot open");
  if (next_pgm_token(is) != "P5") throw FormatError("unreadable image " + path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  img.width = parse_positive(next_pgm_token(is), path);
  img.height = parse_positive(next_pgm_token(is), path);
  const int maxval = parse_positive(next_pgm_token(is), path);
  if (maxval > 65535) throw FormatError("unreadable image " + path.string() + ": maxval too large");

  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(count * bytes_per);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw FormatError("unreadable image " + path.string() + ": truncated pixel data");
  }
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double p : image.pixels) {
    const auto v = static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
    os.put(static_cast<char>(v));
  }
}

std::vector<double> resize_bilinear(const GrayImage& image, int side) {
  if (side < 1) throw DimensionError("resize_bilinear: side must be >= 1");
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw DataError("resize_bilinear: malformed image");
  }
  auto source_coord = [side](int i, int extent) {
    return side == 1 ? (extent - 1) / 2.0 : static_cast<double>(i) * (extent - 1) / (side - 1);
  };
  std::vector<double> out(static_cast<std::size_t>(side) * side);
  for (int r = 0; r < side; ++r) {
    const double y = source_coord(r, image.height);
    const int y0 = std::min(static_cast<int>(std::floor(y)), image.height - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fy = y - y0;
    for (int c = 0; c < side; ++c) {
      const double x = source_coord(c, image.width);
      const int x0 = std::min(static_cast<int>(std::floor(x)), image.width - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double fx = x - x0;
      const double top = (1.0 - fx) * image.at(y0, x0) + fx * image.at(y0, x1);
      const double bottom = (1.0 - fx) * image.at(y1, x0) + fx * image.at(y1, x1);
      out[static_cast<std::size_t>(r) * side + c] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Subspace imageset_to_subspace(std::span<const GrayImage> images, int target_side, int k) {
  if (k < 1) throw DimensionError("imageset_to_subspace: k must be >= 1");
  if (static_cast<int>(images.size()) < k) {
    throw DataError("imageset_to_subspace: " + std::to_string(images.size()) + " images, fewer than k = " +
                    std::to_string(k));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(target_side) * target_side;
  const auto count = static_cast<Eigen::Index>(images.size());
  if (k > n) throw DimensionError("imageset_to_subspace: k exceeds side^2");

  Eigen::MatrixXd stack(n, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto v = resize_bilinear(images[j], target_side);
    stack.col(j) = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
  }

  Eigen::MatrixXd basis(n, k);
  if (count < n) {
    // Left singular vectors from the small Gram: X v_j / sqrt(lambda_j).
    const Eigen::MatrixXd gram = stack.transpose() * stack;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const auto& lambda = es.eigenvalues();  // ascending
    const double top = lambda(count - 1);
    for (int j = 0; j < k; ++j) {
      const double l = lambda(count - 1 - j);
      if (!(top > 0.0) || l <= top * 1e-20) throw DataError("imageset_to_subspace: image stack has rank < k");
      basis.col(j) = stack * es.eigenvectors().col(count - 1 - j) / std::sqrt(l);
    }
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(k - 1) <= s(0) * 1e-10) throw DataError("imageset_to_subspace: image stack has rank < k");
    basis = svd.matrixU().leftCols(k);
  }
  return Subspace(orthonormalize(basis));
}

std::vector<GrayImage> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("image directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_pgm(f));
  return images;
}

// ---- manifests --------------------------------------------------------------

DatasetManifest parse_manifest(const json& j, const fs::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.n = j.at("n").get<int>();
    m.k = j.at("k").get<int>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.label = e.at("label").get<int>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "synthetic") {
        entry.kind = EntryKind::synthetic;
        entry.seed = e.value("seed", std::uint64_t{0});
        if (e.contains("base_seed")) entry.base_seed = e.at("base_seed").get<std::uint64_t>();
        entry.sigma = e.value("sigma", 0.0);
      } else if (kind == "images") {
        entry.kind = EntryKind::images;
        entry.dir = e.at("dir").get<std::string>();
      } else {
        throw FormatError("manifest entry '" + entry.id + "': unknown kind '" + kind + "'");
      }
      entry.split = e.value("split", std::string("train"));
      if (e.contains("n")) entry.n = e.at("n").get<int>();
      if (e.contains("k")) entry.k = e.at("k").get<int>();
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("manifest parse failure: ") + ex.what());
  }

  if (m.entries.empty()) throw DataError("empty manifest");
  std::set<std::string> ids;
  const ManifestEntry& first = m.entries.front();
  for (const auto& e : m.entries) {
    if (!ids.insert(e.id).second) throw DataError("manifest: duplicate sample id '" + e.id + "'");
    if (e.label < 0) throw DataError("manifest entry '" + e.id + "': negative label");
    if (e.split != "train" && e.split != "test") {
      throw DataError("manifest entry '" + e.id + "': split must be \"train\" or \"test\"");
    }
    if (m.entry_n(e) != m.entry_n(first) || m.entry_k(e) != m.entry_k(first)) {
      throw DataError("manifest: inconsistent dimensions between '" + first.id + "' (n=" +
                      std::to_string(m.entry_n(first)) + ", k=" + std::to_string(m.entry_k(first)) + ") and '" +
                      e.id + "' (n=" + std::to_string(m.entry_n(e)) + ", k=" + std::to_string(m.entry_k(e)) + ")");
    }
  }
  if (m.entry_k(first) < 1 || m.entry_k(first) > m.entry_n(first)) {
    throw DataError("manifest: need 1 <= k <= n");
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest not found: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& ex) {
    throw FormatError("manifest parse failure in " + path.string() + ": " + ex.what());
  }
  return parse_manifest(j, path.parent_path());
}

json manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json je{{"id", e.id}, {"label", e.label}, {"split", e.split}};
    if (e.kind == EntryKind::synthetic) {
      je["kind"] = "synthetic";
      je["seed"] = e.seed;
      if (e.base_seed) {
        je["base_seed"] = *e.base_seed;
        je["sigma"] = e.sigma;
      }
    } else {
      je["kind"] = "images";
      je["dir"] = e.dir.generic_string();
    }
    if (e.n) je["n"] = *e.n;
    if (e.k) je["k"] = *e.k;
    entries.push_back(std::move(je));
  }
  return json{{"n", m.n}, {"k", m.k}, {"entries", std::move(entries)}};
}

namespace {

Subspace build_entry(const DatasetManifest& m, const ManifestEntry& e) {
  const int n = m.entry_n(e);
  const int k = m.entry_k(e);
  if (e.kind == EntryKind::synthetic) {
    if (e.base_seed) return perturb_subspace(random_subspace(n, k, *e.base_seed), e.sigma, e.seed);
    return random_subspace(n, k, e.seed);
  }
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw DataError("image entries need n to be a perfect square, got " + std::to_string(n));
  const fs::path dir = e.dir.is_absolute() ? e.dir : m.base_dir / e.dir;
  const auto images = load_image_dir(dir);
  return imageset_to_subspace(images, side, k);
}

void append(SubspaceDataset& ds, const ManifestEntry& e, Subspace s) {
  ds.samples.push_back(std::move(s));
  ds.labels.push_back(e.label);
  ds.ids.push_back(e.id);
}

}  // namespace

SubspaceDataset materialise(const DatasetManifest& manifest) {
  SubspaceDataset ds;
  int max_label = -1;
  for (const auto& e : manifest.entries) {
    try {
      append(ds, e, build_entry(manifest, e));
    } catch (const std::exception& ex) {
      throw DataError("entry '" + e.id + "': " + ex.what());
    }
    max_label = std::max(max_label, e.label);
  }
  ds.class_count = max_label + 1;
  return ds;
}

SplitDataset materialise_split(const DatasetManifest& manifest) {
  SubspaceDataset all = materialise(manifest);
  SplitDataset out;
  out.train.class_count = out.test.class_count = all.class_count;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    auto& dst = manifest.entries[i].split == "test" ? out.test : out.train;
    dst.samples.push_back(std::move(all.samples[i]));
    dst.labels.push_back(all.labels[i]);
    dst.ids.push_back(all.ids[i]);
  }
  return out;
}

DatasetManifest write_synthetic_image_sets(const fs::path& root, const SyntheticImageSpec& spec) {
  if (spec.rank < 1 || spec.side < 1 || spec.images_per_set < 1 || spec.classes < 1) {
    throw DimensionError("write_synthetic_image_sets: invalid spec");
  }
  const int n = spec.side * spec.side;
  fs::create_directories(root);
  DatasetManifest manifest;
  manifest.n = n;
  manifest.k = std::min(spec.rank + 1, n);  // class-specific rank plus the constant background
  manifest.base_dir = root;

  for (int c = 0; c < spec.classes; ++c) {
    const auto cls = static_cast<std::uint64_t>(c);
    const Subspace base = random_subspace(n, spec.rank, derive_seed(spec.seed, {0, cls}));
    auto emit = [&](int sets, std::uint64_t split, const std::string& split_name) {
      for (int s = 0; s < sets; ++s) {
        const auto set_id = static_cast<std::uint64_t>(s);
        const Subspace span = perturb_subspace(base, spec.set_sigma, derive_seed(spec.seed, {1 + split, cls, set_id}));
        const std::string id = split_name + "_c" + std::to_string(c) + "_s" + std::to_string(s);
        fs::create_directories(root / id);
        GaussianStream gauss(derive_seed(spec.seed, {3 + split, cls, set_id}));
        for (int i = 0; i < spec.images_per_set; ++i) {
          Eigen::VectorXd coeffs(spec.rank);
          gauss.fill(coeffs.data(), coeffs.data() + coeffs.size());
          Eigen::VectorXd pixels = span.basis() * coeffs;
          GrayImage img{spec.side, spec.side, std::vector<double>(n)};
          for (int p = 0; p < n; ++p) img.pixels[p] = 0.5 + pixels(p) + spec.pixel_noise * gauss();
          char name[32];
          std::snprintf(name, sizeof(name), "img_%04d.pgm", i);
          write_pgm(root / id / name, img);
        }
        ManifestEntry e;
        e.id = id;
        e.label = c;
        e.kind = EntryKind::images;
        e.dir = id;
        e.split = split_name;
        manifest.entries.push_back(std::move(e));
      }
    };
    emit(spec.train_sets_per_class, 0, "train");
    emit(spec.test_sets_per_class, 1, "test");
  }
  std::ofstream os(root / "manifest.json");
  os << manifest_to_json(manifest).dump(2) << '\n';
  return manifest;
}

// ---- dataset directories ----------------------------------------------------

void save_dataset(const fs::path& dir, const SplitDataset& data) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.csv");
  if (!index) throw DataError("cannot write dataset index in " + dir.string());
  index << "id,label,split,file\n";
  std::size_t counter = 0;
  auto dump = [&](const SubspaceDataset& ds, const char* split) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string id = i < ds.ids.size() ? ds.ids[i] : std::string(split) + "_" + std::to_string(i);
      if (id.find(',') != std::string::npos) throw DataError("sample id contains a comma: " + id);
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%06zu.grss", counter++);
      save_subspace(dir / name, ds.samples[i]);
      index << id << ',' << ds.labels[i] << ',' << split << ',' << name << '\n';
    }
  };
  dump(data.train, "train");
  dump(data.test, "test");
}

SplitDataset load_dataset(const fs::path& dir) {
  std::ifstream index(dir / "index.csv");
  if (!index) throw DataError("dataset index not found in " + dir.string());
  SplitDataset out;
  std::string line;
  std::getline(index, line);
  int max_label = -1;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, label, split, file;
    if (!std::getline(ss, id, ',') || !std::getline(ss, label, ',') || !std::getline(ss, split, ',') ||
        !std::getline(ss, file)) {
      throw FormatError("malformed dataset index line: " + line);
    }
    auto& dst = split == "test" ? out.test : out.train;
    dst.samples.push_back(load_subspace(dir / file));
    dst.labels.push_back(std::stoi(label));
    dst.ids.push_back(id);
    max_label = std::max(max_label, dst.labels.back());
  }
  out.train.class_count = out.test.class_count = max_label + 1;
  return out;
}

}  // namespace grassketch
