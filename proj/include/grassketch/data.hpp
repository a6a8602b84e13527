#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassketch/classify.hpp"
#include "grassketch/subspace.hpp"

namespace grassketch {

struct SplitDataset {
  SubspaceDataset train;
  SubspaceDataset test;
};

// ---- synthetic benchmark --------------------------------------------------

struct SyntheticSpec {
  int classes = 8;
  int per_class_train = 20;
  int per_class_test = 20;
  int n = 256;
  int k = 5;
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

/// One random base subspace per class; every train and test sample is an
/// independent perturbation of its class base at `sigma`.
SplitDataset synth_benchmark(const SyntheticSpec& spec);

// ---- images ---------------------------------------------------------------

/// Grayscale image, row-major, intensities scaled to [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

/// Binary PGM (P5), 8- or 16-bit.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Bilinear resize to side x side with corner-aligned sampling: output pixel
/// (r, c) samples the source at (r (H-1)/(side-1), c (W-1)/(side-1)).
/// Returned flattened row-major.
std::vector<double> resize_bilinear(const GrayImage& image, int side);

/// Span of the top-k left singular vectors of the side^2 x #images stack of
/// resized, flattened images.
Subspace imageset_to_subspace(std::span<const GrayImage> images, int target_side, int k);

/// All *.pgm files in `dir`, sorted by file name.
std::vector<GrayImage> load_image_dir(const std::filesystem::path& dir);

// ---- manifests ------------------------------------------------------------

enum class EntryKind { synthetic, images };

struct ManifestEntry {
  std::string id;
  int label = 0;
  EntryKind kind = EntryKind::synthetic;
  std::string split = "train";
  // synthetic: random_subspace(n, k, seed), or perturb_subspace(random_subspace(n, k, base_seed), sigma, seed)
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> base_seed;
  double sigma = 0.0;
  // images
  std::filesystem::path dir;
  // per-entry overrides of the manifest-level dimensions
  std::optional<int> n;
  std::optional<int> k;
};

struct DatasetManifest {
  int n = 0;
  int k = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // image directories are resolved against this

  int entry_n(const ManifestEntry& e) const { return e.n.value_or(n); }
  int entry_k(const ManifestEntry& e) const { return e.k.value_or(k); }
};

/// Schema: {"n", "k", "entries": [{"id", "label", "kind": "synthetic"|"images",
/// "seed"?, "base_seed"?, "sigma"?, "dir"?, "split"?, "n"?, "k"?}]}.
DatasetManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const DatasetManifest& m);

/// Builds every entry; failures are rethrown as DataError naming the entry id.
SubspaceDataset materialise(const DatasetManifest& manifest);
/// Same, partitioned by each entry's split ("train" / "test").
SplitDataset materialise_split(const DatasetManifest& manifest);

struct SyntheticImageSpec {
  int classes = 8;
  int train_sets_per_class = 4;
  int test_sets_per_class = 4;
  int images_per_set = 20;
  int side = 32;
  int rank = 8;  // plus the constant background: subspaces in G(9, side^2)
  double set_sigma = 0.02;  // spread of set subspaces around their class subspace
  double pixel_noise = 0.01;
  std::uint64_t seed = 0;
};

/// Writes low-rank synthetic image sets as PGM directories under `root`
/// together with `root/manifest.json`, and returns the manifest.
DatasetManifest write_synthetic_image_sets(const std::filesystem::path& root, const SyntheticImageSpec& spec);

// ---- dataset directories --------------------------------------------------

/// Writes one .grss file per sample plus index.csv (id,label,split,file).
void save_dataset(const std::filesystem::path& dir, const SplitDataset& data);
SplitDataset load_dataset(const std::filesystem::path& dir);

}  // namespace grassketch
