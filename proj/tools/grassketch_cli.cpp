// grassketch: dataset generation, ingestion, sketching and the experiment
// harness. Exit codes: 0 success, 1 validation failure, 2 config/data error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grassketch/data.hpp"
#include "grassketch/errors.hpp"
#include "grassketch/harness.hpp"
#include "grassketch/sketch.hpp"
#include "grassketch/subspace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace grassketch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> features;
  std::optional<int> trials;
  std::string out;
  int threads = 1;
  std::string config;
};

void log(const std::string& line) { std::cerr << line << std::endl; }

// Defaults, then --config, then global flags, then `overrides` from the subcommand.
ExperimentConfig resolve_config(ExperimentKind kind, const Globals& g,
                                const std::function<void(ExperimentConfig&)>& overrides = {}) {
  ExperimentConfig c = default_config(kind);
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw ConfigError("config not found: " + g.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& ex) {
      throw ConfigError("config " + g.config + " is not valid JSON: " + ex.what());
    }
    if (!j.contains("kind")) j["kind"] = to_string(kind);
    if (j.at("kind") != to_string(kind)) {
      throw ConfigError("config kind '" + j.at("kind").get<std::string>() + "' does not match subcommand " +
                        to_string(kind));
    }
    c = config_from_json(j);
  }
  if (g.seed || g.trials) {
    const std::uint64_t first = g.seed.value_or(c.seeds.front());
    const int count = g.trials.value_or(static_cast<int>(c.seeds.size()));
    if (count < 1) throw ConfigError("--trials must be >= 1");
    c.seeds.clear();
    for (int i = 0; i < count; ++i) c.seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  if (g.features) c.m_grid = {*g.features};
  c.threads = g.threads;
  if (!g.out.empty()) c.out = g.out;
  if (overrides) overrides(c);
  c.validate();
  return c;
}

void emit_json(const json& j, const fs::path& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream os(out);
  if (!os) throw DataError("cannot write " + out.string());
  os << j.dump(2) << '\n';
  log("wrote " + out.string());
}

std::uint64_t base_seed(const Globals& g) { return g.seed.value_or(1); }

// ---- subcommands --------------------------------------------------------------

struct GenOptions {
  bool images = false;
  SyntheticSpec synth{};
  SyntheticImageSpec image{};
};

int run_gen(const Globals& g, const GenOptions& o) {
  if (g.out.empty()) throw ConfigError("gen needs --out <dir>");
  if (o.images) {
    SyntheticImageSpec spec = o.image;
    spec.seed = base_seed(g);
    const auto manifest = write_synthetic_image_sets(g.out, spec);
    log("wrote " + std::to_string(manifest.entries.size()) + " image sets and manifest.json to " + g.out);
    return kExitOk;
  }
  SyntheticSpec spec = o.synth;
  spec.seed = base_seed(g);
  const SplitDataset data = synth_benchmark(spec);
  save_dataset(g.out, data);
  log("wrote " + std::to_string(data.train.size() + data.test.size()) + " subspaces to " + g.out);
  return kExitOk;
}

int run_ingest(const Globals& g, const std::string& manifest_path) {
  if (g.out.empty()) throw ConfigError("ingest needs --out <dir>");
  if (!fs::exists(manifest_path)) throw DataError("manifest not found: " + manifest_path);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const SplitDataset data = materialise_split(manifest);
  save_dataset(g.out, data);
  log("ingested " + std::to_string(manifest.entries.size()) + " entries into " + g.out);
  return kExitOk;
}

int run_sketch(const Globals& g, const std::string& input, const std::string& kind) {
  if (g.out.empty()) throw ConfigError("sketch needs --out <dir>");
  if (kind != "real" && kind != "bits" && kind != "both") throw ConfigError("--kind must be real, bits or both");
  const std::uint64_t m = g.features.value_or(1000);
  if (m == 0) throw ConfigError("--features must be positive");

  std::vector<Subspace> subspaces;
  std::vector<std::string> names;
  if (fs::is_directory(input)) {
    const SplitDataset data = load_dataset(input);
    for (const auto* part : {&data.train, &data.test}) {
      for (std::size_t i = 0; i < part->size(); ++i) {
        subspaces.push_back(part->samples[i]);
        names.push_back(part->ids.empty() ? "sample_" + std::to_string(names.size()) : part->ids[i]);
      }
    }
  } else if (fs::exists(input)) {
    subspaces.push_back(load_subspace(input));
    names.push_back(fs::path(input).stem().string());
  } else {
    throw DataError("input not found: " + input);
  }
  if (subspaces.empty()) throw DataError("no subspaces in " + input);

  const RopEnsemble e{base_seed(g), m, subspaces.front().n()};
  fs::create_directories(g.out);
  const auto sketches = rop_sketch_batch(subspaces, e);
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    const fs::path stem = fs::path(g.out) / names[i];
    if (kind != "bits") save_sketch(stem.string() + ".real.gskt", sketches[i]);
    if (kind != "real") save_sketch(stem.string() + ".bits.gskt", binarize(sketches[i]));
  }
  log("sketched " + std::to_string(sketches.size()) + " subspaces with m=" + std::to_string(m) + " into " + g.out);
  return kExitOk;
}

struct McOptions {
  std::vector<int> ks;
  std::optional<int> n;
  std::vector<std::uint64_t> m_grid;
  bool no_probes = false;
};

int run_mc(const Globals& g, const McOptions& o) {
  const ExperimentConfig c = resolve_config(ExperimentKind::mc_validate, g, [&](ExperimentConfig& c) {
    if (!o.ks.empty()) c.mc.ks = o.ks;
    if (o.n) c.mc.n = *o.n;
    if (!o.m_grid.empty()) c.m_grid = o.m_grid;
    if (o.no_probes) c.mc.rotation_probe = c.mc.psd_probe = false;
  });

  const McReport report = mc_validate(c);
  const json j = to_json(report, c);
  if (c.out.empty()) {
    write_mc_csv(std::cout, report);
  } else {
    if (c.out.has_parent_path()) fs::create_directories(c.out.parent_path());
    std::ofstream csv(c.out);
    if (!csv) throw DataError("cannot write " + c.out.string());
    write_mc_csv(csv, report);
    log("wrote " + c.out.string());
    fs::path json_path = c.out;
    json_path.replace_extension(".json");
    if (json_path == c.out) json_path += ".json";
    emit_json(j, json_path);
  }
  for (const auto& s : report.slopes) {
    log("kappa2 slope k=" + std::to_string(s.k) + " m=" + std::to_string(s.m) + ": " + std::to_string(s.slope) +
        " (a=" + std::to_string(s.candidate_a) + ", b=" + std::to_string(s.candidate_b) + ") winner " + s.winner);
  }
  const bool ok = report.passed();
  log(ok ? "mc-validate: all verdicts pass" : "mc-validate: validation failure");
  return ok ? kExitOk : kExitValidation;
}

void log_summary(const ClassificationReport& r) {
  log("exact svm accuracy " + std::to_string(r.exact_svm.accuracy) + ", exact nearest-subspace accuracy " +
      std::to_string(r.exact_ns.accuracy));
  for (const auto& s : r.summary) {
    std::string line = s.variant + " m=" + std::to_string(s.m) + " accuracy " + std::to_string(s.mean_accuracy) +
                       " +- " + std::to_string(s.std_accuracy);
    if (s.mean_agreement >= 0.0) line += " agreement " + std::to_string(s.mean_agreement);
    log(line);
  }
}

int run_classify_synth(const Globals& g, std::optional<std::uint64_t> data_seed) {
  const ExperimentConfig c = resolve_config(ExperimentKind::synth_classify, g, [&](ExperimentConfig& c) {
    if (data_seed) c.synth.data_seed = *data_seed;
  });
  const auto report = synth_experiment(c);
  log_summary(report);
  emit_json(to_json(report, c), c.out);
  return kExitOk;
}

int run_classify_images(const Globals& g, const std::string& manifest) {
  const ExperimentConfig c = resolve_config(ExperimentKind::imageset_classify, g, [&](ExperimentConfig& c) {
    if (!manifest.empty()) c.images.manifest = manifest;
  });
  const auto report = imageset_experiment(c);
  log_summary(report);
  emit_json(to_json(report, c), c.out);
  return kExitOk;
}

int run_bench(const Globals& g, std::optional<std::uint64_t> timing_m) {
  const ExperimentConfig c = resolve_config(ExperimentKind::bench, g, [&](ExperimentConfig& c) {
    if (timing_m) c.bench.timing_m = *timing_m;
  });
  const auto report = bench(c);
  for (const auto& s : report.storage) {
    log("m=" + std::to_string(s.m) + " payload real " + std::to_string(s.real_payload) + " B, bits " +
        std::to_string(s.bits_payload) + " B, ratio " + std::to_string(s.payload_ratio));
  }
  log("pm1_dot " + std::to_string(report.pm1_ns_per_call) + " ns, float dot " +
      std::to_string(report.float_ns_per_call) + " ns, ratio " + std::to_string(report.throughput_ratio));
  emit_json(to_json(report, c), c.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grassmannian kernels and rank-one-projection sketches"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (ensemble seed, or first of the trial seeds)");
  app.add_option("--features", g.features, "Number of sketch features m");
  app.add_option("--trials", g.trials, "Number of consecutive trial seeds");
  app.add_option("--out", g.out, "Output path");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment config (JSON)");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic subspace dataset or synthetic image sets");
  gen_cmd->add_flag("--images", gen.images, "Write PGM image sets and a manifest instead of subspaces");
  gen_cmd->add_option("--classes", gen.synth.classes);
  gen_cmd->add_option("--per-class-train", gen.synth.per_class_train);
  gen_cmd->add_option("--per-class-test", gen.synth.per_class_test);
  gen_cmd->add_option("--n", gen.synth.n);
  gen_cmd->add_option("--k", gen.synth.k);
  gen_cmd->add_option("--sigma", gen.synth.sigma);
  gen_cmd->add_option("--side", gen.image.side, "Image side (with --images)");
  gen_cmd->add_option("--rank", gen.image.rank, "Class-specific image rank (with --images)");
  gen_cmd->add_option("--images-per-set", gen.image.images_per_set);

  std::string manifest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build the subspaces described by a manifest");
  ingest_cmd->add_option("manifest", manifest, "Manifest JSON")->required();

  std::string sketch_input, sketch_kind = "both";
  auto* sketch_cmd = app.add_subcommand("sketch", "Sketch a subspace file or dataset directory");
  sketch_cmd->add_option("input", sketch_input, ".grss file or dataset directory")->required();
  sketch_cmd->add_option("--kind", sketch_kind, "real, bits or both");

  McOptions mc;
  auto* mc_cmd = app.add_subcommand("mc-validate", "Monte Carlo check of the closed-form expectations");
  mc_cmd->add_option("--k", mc.ks, "Subspace dimensions to sweep");
  mc_cmd->add_option("--n", mc.n, "Ambient dimension");
  mc_cmd->add_option("--m", mc.m_grid, "m grid");
  mc_cmd->add_flag("--no-probes", mc.no_probes, "Skip the rotation and PSD probes");

  std::optional<std::uint64_t> data_seed;
  auto* synth_cmd = app.add_subcommand("classify-synth", "Synthetic classification experiment");
  synth_cmd->add_option("--data-seed", data_seed, "Seed of the synthetic benchmark");

  std::string image_manifest;
  auto* images_cmd = app.add_subcommand("classify-images", "Image-set classification experiment");
  images_cmd->add_option("--manifest", image_manifest, "Image-set manifest JSON");

  std::optional<std::uint64_t> timing_m;
  auto* bench_cmd = app.add_subcommand("bench", "Storage and timing benchmarks");
  bench_cmd->add_option("--timing-m", timing_m, "m for the dot-product timing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return run_gen(g, gen);
    if (*ingest_cmd) return run_ingest(g, manifest);
    if (*sketch_cmd) return run_sketch(g, sketch_input, sketch_kind);
    if (*mc_cmd) return run_mc(g, mc);
    if (*synth_cmd) return run_classify_synth(g, data_seed);
    if (*images_cmd) return run_classify_images(g, image_manifest);
    if (*bench_cmd) return run_bench(g, timing_m);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitConfig;
}
