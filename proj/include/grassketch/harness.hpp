#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassketch/classify.hpp"
#include "grassketch/data.hpp"

namespace grassketch {

inline constexpr int kReportSchemaVersion = 1;

enum class ExperimentKind { mc_validate, synth_classify, imageset_classify, bench };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct McSettings {
  int n = 16;
  std::vector<int> ks{1};
  std::vector<double> theta_grid;  // k = 1 sweep; empty selects {0, pi/8, ..., pi/2}
  int pairs_per_k = 20;            // k > 1: random pairs
  double z = 3.0;                  // base SE band
  double z_wide = 4.0;             // band when a sweep tests more than `wide_after` points
  int wide_after = 20;
  double slope_tolerance = 0.02;   // relative, kappa2 general-k constant

  bool rotation_probe = true;
  int rotation_k = 2;
  std::vector<double> rotation_angles;  // empty selects {pi/6, pi/3}
  int rotations = 10;
  int rotation_ensembles = 20;
  double rotation_z = 4.0;

  bool psd_probe = true;
  int psd_lines = 30;
  double psd_threshold = -0.02;
};

struct SynthSettings {
  SyntheticSpec data{};
  std::uint64_t data_seed = 7;
  bool nearest_subspace = true;
  bool svm = true;
};

struct ImageSettings {
  std::filesystem::path manifest;
  bool svm = true;
};

struct ClassifierSettings {
  double lambda = 0.0;  // <= 0 selects 1 / (training size)
  int epochs = 20;
  double c = 1.0;
};

struct BenchSettings {
  std::vector<std::uint64_t> storage_m{1000, 4096, 65536};
  std::vector<std::uint64_t> dataset_sizes{100, 1000, 10000};
  std::uint64_t timing_m = 1000000;
  int timing_repeats = 20;
  double throughput_target = 8.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::mc_validate;
  std::vector<std::uint64_t> m_grid{100000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int threads = 1;
  std::filesystem::path out;

  McSettings mc;
  SynthSettings synth;
  ImageSettings images;
  ClassifierSettings classifier;
  BenchSettings bench;

  /// m grid strictly increasing and positive; at least one seed.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Default config for the given kind (desk-scale defaults).
ExperimentConfig default_config(ExperimentKind kind);

// ---- mc-validate --------------------------------------------------------

enum class Verdict { pass, fail, not_applicable };
std::string to_string(Verdict v);

struct McRow {
  int k = 0;
  int point = 0;
  std::vector<double> theta;
  std::string estimator;  // kappa1, kappa2, kappa2sym, kappa3
  std::uint64_t m = 0;
  double mean = 0.0;
  double se = 0.0;
  std::optional<double> closed_form;
  std::optional<double> closed_form_alt;  // kappa2, k > 1: the (c_k sqrt(2/pi) / k) candidate
  double z = 0.0;  // SE band applied to this row
  Verdict verdict = Verdict::not_applicable;
};

struct SlopeReport {
  int k = 0;
  std::uint64_t m = 0;
  double slope = 0.0;
  double slope_se = 0.0;
  double candidate_a = 0.0;  // c_k sqrt(2/pi)
  double candidate_b = 0.0;  // c_k sqrt(2/pi) / k
  double rel_error_a = 0.0;
  double rel_error_b = 0.0;
  std::string winner;  // "a", "b", "none", "both"
  Verdict verdict = Verdict::not_applicable;
};

struct RotationProbe {
  std::vector<double> angles;
  std::uint64_t m = 0;
  std::vector<double> means;
  std::vector<double> ses;
  double max_pairwise_z = 0.0;
  double z = 0.0;
  Verdict verdict = Verdict::not_applicable;
};

struct PsdProbe {
  int lines = 0;
  std::uint64_t m = 0;
  double min_eigenvalue = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::not_applicable;
};

struct McReport {
  std::vector<McRow> rows;
  std::vector<SlopeReport> slopes;
  std::optional<RotationProbe> rotation;
  std::optional<PsdProbe> psd;

  bool passed() const;
};

McReport mc_validate(const ExperimentConfig& config);
void write_mc_csv(std::ostream& os, const McReport& report);
nlohmann::json to_json(const McReport& report, const ExperimentConfig& config);

/// Per-pair Monte Carlo building blocks, shared by the harness and tests.
struct PairEstimates {
  std::vector<double> kappa1, kappa2, kappa2sym, kappa3;  // one entry per ensemble
};
/// Estimates for each (a_i, b_i) pair under each seed's ensemble of size m.
std::vector<PairEstimates> monte_carlo_pairs(std::span<const std::pair<Subspace, Subspace>> pairs, std::uint64_t m,
                                             std::span<const std::uint64_t> seeds, int threads = 1);

// ---- classification experiments -----------------------------------------

struct RunRecord {
  std::string variant;  // k1_svm, k3_svm, k2_ns
  std::uint64_t m = 0;
  std::uint64_t seed = 0;
  AccuracyReport report;
  double agreement = -1.0;  // k2_ns: fraction matching exact nearest-subspace predictions
  double wall_time_ms = 0.0;
};

struct VariantSummary {
  std::string variant;
  std::uint64_t m = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_agreement = -1.0;
};

struct ClassificationReport {
  AccuracyReport exact_svm;  // kappa1, precomputed Gram
  AccuracyReport exact_ns;   // nearest subspace with the exact kernel
  double exact_svm_ms = 0.0;
  std::vector<RunRecord> runs;
  std::vector<VariantSummary> summary;

  const VariantSummary* find(const std::string& variant, std::uint64_t m) const;
};

/// Exact-Gram SVM and exact nearest-subspace once; for every (m, seed):
/// kappa1- and kappa3-feature linear SVMs plus kappa2 nearest subspace.
ClassificationReport run_classification(const SplitDataset& data, const ExperimentConfig& config);

ClassificationReport synth_experiment(const ExperimentConfig& config);
/// Throws DataError("dataset not supplied: <path>") when the manifest is absent.
ClassificationReport imageset_experiment(const ExperimentConfig& config);
nlohmann::json to_json(const ClassificationReport& report, const ExperimentConfig& config);
nlohmann::json to_json(const AccuracyReport& r);

// ---- bench ----------------------------------------------------------------

struct StorageRow {
  std::uint64_t m = 0;
  std::uint64_t real_payload = 0;
  std::uint64_t bits_payload = 0;
  std::uint64_t real_file = 0;
  std::uint64_t bits_file = 0;
  double payload_ratio = 0.0;
};

struct GramRow {
  std::uint64_t dataset_size = 0;
  std::uint64_t m = 0;
  std::uint64_t gram_bytes = 0;
  std::uint64_t real_sketch_bytes = 0;
  std::uint64_t bit_sketch_bytes = 0;
};

struct BenchReport {
  std::vector<StorageRow> storage;
  std::vector<GramRow> gram;
  std::uint64_t timing_m = 0;
  double pm1_ns_per_call = 0.0;
  double float_ns_per_call = 0.0;
  double throughput_ratio = 0.0;
  bool throughput_target_met = false;
};

BenchReport bench(const ExperimentConfig& config);
nlohmann::json to_json(const BenchReport& report, const ExperimentConfig& config);

}  // namespace grassketch
