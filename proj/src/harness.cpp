#include "grassketch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "grassketch/kernels_approx.hpp"
#include "grassketch/kernels_exact.hpp"
#include "grassketch/linalg.hpp"
#include "grassketch/rng.hpp"
#include "grassketch/sketch.hpp"
#include "grassketch/stats.hpp"

namespace grassketch {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any worker is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> default_theta_grid() {
  using std::numbers::pi;
  return {0.0, pi / 8, pi / 4, 3 * pi / 8, pi / 2};
}

std::vector<double> default_rotation_angles() {
  using std::numbers::pi;
  return {pi / 6, pi / 3};
}

Verdict verdict_of(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

}  // namespace

// ---- config -----------------------------------------------------------------

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::mc_validate: return "mc-validate";
    case ExperimentKind::synth_classify: return "classify-synth";
    case ExperimentKind::imageset_classify: return "classify-images";
    case ExperimentKind::bench: return "bench";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::mc_validate, ExperimentKind::synth_classify, ExperimentKind::imageset_classify,
                 ExperimentKind::bench}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind: " + s);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "n/a";
  }
  return "n/a";
}

void ExperimentConfig::validate() const {
  if (m_grid.empty()) throw ConfigError("m grid is empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (m_grid[i] == 0) throw ConfigError("m grid entries must be positive");
    if (i > 0 && m_grid[i] <= m_grid[i - 1]) throw ConfigError("m grid must be strictly increasing");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (kind == ExperimentKind::mc_validate) {
    if (mc.ks.empty()) throw ConfigError("mc: no subspace dimensions given");
    for (int k : mc.ks) {
      if (k < 1 || 2 * k > mc.n) throw ConfigError("mc: each k needs 1 <= k and 2k <= n");
    }
    if (mc.pairs_per_k < 1) throw ConfigError("mc: pairs_per_k must be >= 1");
    for (double t : mc.theta_grid) {
      if (!(t >= 0.0 && t <= std::numbers::pi / 2 + 1e-12)) throw ConfigError("mc: theta grid must lie in [0, pi/2]");
    }
    if (mc.rotation_probe && (mc.rotations < 2 || mc.rotation_ensembles < 2)) {
      throw ConfigError("mc: rotation probe needs >= 2 rotations and >= 2 ensembles");
    }
  }
  if (kind == ExperimentKind::imageset_classify && images.manifest.empty()) {
    throw ConfigError("classify-images needs a manifest path");
  }
}

json to_json(const ExperimentConfig& c) {
  const auto& d = c.synth.data;
  return json{
      {"kind", to_string(c.kind)},
      {"m_grid", c.m_grid},
      {"seeds", c.seeds},
      {"threads", c.threads},
      {"out", c.out.generic_string()},
      {"mc",
       {{"n", c.mc.n},
        {"ks", c.mc.ks},
        {"theta_grid", c.mc.theta_grid.empty() ? default_theta_grid() : c.mc.theta_grid},
        {"pairs_per_k", c.mc.pairs_per_k},
        {"z", c.mc.z},
        {"z_wide", c.mc.z_wide},
        {"wide_after", c.mc.wide_after},
        {"slope_tolerance", c.mc.slope_tolerance},
        {"rotation_probe", c.mc.rotation_probe},
        {"rotation_k", c.mc.rotation_k},
        {"rotation_angles", c.mc.rotation_angles.empty() ? default_rotation_angles() : c.mc.rotation_angles},
        {"rotations", c.mc.rotations},
        {"rotation_ensembles", c.mc.rotation_ensembles},
        {"rotation_z", c.mc.rotation_z},
        {"psd_probe", c.mc.psd_probe},
        {"psd_lines", c.mc.psd_lines},
        {"psd_threshold", c.mc.psd_threshold}}},
      {"synth",
       {{"classes", d.classes},
        {"per_class_train", d.per_class_train},
        {"per_class_test", d.per_class_test},
        {"n", d.n},
        {"k", d.k},
        {"sigma", d.sigma},
        {"data_seed", c.synth.data_seed},
        {"nearest_subspace", c.synth.nearest_subspace},
        {"svm", c.synth.svm}}},
      {"images", {{"manifest", c.images.manifest.generic_string()}, {"svm", c.images.svm}}},
      {"classifier", {{"lambda", c.classifier.lambda}, {"epochs", c.classifier.epochs}, {"c", c.classifier.c}}},
      {"bench",
       {{"storage_m", c.bench.storage_m},
        {"dataset_sizes", c.bench.dataset_sizes},
        {"timing_m", c.bench.timing_m},
        {"timing_repeats", c.bench.timing_repeats},
        {"throughput_target", c.bench.throughput_target}}},
  };
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::mc_validate: c.m_grid = {100000}; break;
    case ExperimentKind::synth_classify: c.m_grid = {100, 1000, 10000, 100000}; break;
    case ExperimentKind::imageset_classify:
      c.m_grid = {100, 1000, 2000, 10000};
      c.synth.data.n = 1024;
      c.synth.data.k = 9;
      break;
    case ExperimentKind::bench: c.m_grid = {5000}; break;
  }
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c = default_config(experiment_kind_from_string(j.value("kind", std::string("mc-validate"))));
    if (j.contains("m_grid")) c.m_grid = j.at("m_grid").get<std::vector<std::uint64_t>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.threads = j.value("threads", c.threads);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("mc")) {
      const auto& m = j.at("mc");
      c.mc.n = m.value("n", c.mc.n);
      c.mc.ks = m.value("ks", c.mc.ks);
      c.mc.theta_grid = m.value("theta_grid", c.mc.theta_grid);
      c.mc.pairs_per_k = m.value("pairs_per_k", c.mc.pairs_per_k);
      c.mc.z = m.value("z", c.mc.z);
      c.mc.z_wide = m.value("z_wide", c.mc.z_wide);
      c.mc.wide_after = m.value("wide_after", c.mc.wide_after);
      c.mc.slope_tolerance = m.value("slope_tolerance", c.mc.slope_tolerance);
      c.mc.rotation_probe = m.value("rotation_probe", c.mc.rotation_probe);
      c.mc.rotation_k = m.value("rotation_k", c.mc.rotation_k);
      c.mc.rotation_angles = m.value("rotation_angles", c.mc.rotation_angles);
      c.mc.rotations = m.value("rotations", c.mc.rotations);
      c.mc.rotation_ensembles = m.value("rotation_ensembles", c.mc.rotation_ensembles);
      c.mc.rotation_z = m.value("rotation_z", c.mc.rotation_z);
      c.mc.psd_probe = m.value("psd_probe", c.mc.psd_probe);
      c.mc.psd_lines = m.value("psd_lines", c.mc.psd_lines);
      c.mc.psd_threshold = m.value("psd_threshold", c.mc.psd_threshold);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      auto& d = c.synth.data;
      d.classes = s.value("classes", d.classes);
      d.per_class_train = s.value("per_class_train", d.per_class_train);
      d.per_class_test = s.value("per_class_test", d.per_class_test);
      d.n = s.value("n", d.n);
      d.k = s.value("k", d.k);
      d.sigma = s.value("sigma", d.sigma);
      c.synth.data_seed = s.value("data_seed", c.synth.data_seed);
      c.synth.nearest_subspace = s.value("nearest_subspace", c.synth.nearest_subspace);
      c.synth.svm = s.value("svm", c.synth.svm);
    }
    if (j.contains("images")) {
      const auto& im = j.at("images");
      c.images.manifest = im.value("manifest", std::string());
      c.images.svm = im.value("svm", c.images.svm);
    }
    if (j.contains("classifier")) {
      const auto& cl = j.at("classifier");
      c.classifier.lambda = cl.value("lambda", c.classifier.lambda);
      c.classifier.epochs = cl.value("epochs", c.classifier.epochs);
      c.classifier.c = cl.value("c", c.classifier.c);
    }
    if (j.contains("bench")) {
      const auto& b = j.at("bench");
      c.bench.storage_m = b.value("storage_m", c.bench.storage_m);
      c.bench.dataset_sizes = b.value("dataset_sizes", c.bench.dataset_sizes);
      c.bench.timing_m = b.value("timing_m", c.bench.timing_m);
      c.bench.timing_repeats = b.value("timing_repeats", c.bench.timing_repeats);
      c.bench.throughput_target = b.value("throughput_target", c.bench.throughput_target);
    }
    return c;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config parse failure: ") + ex.what());
  }
}

// ---- Monte Carlo --------------------------------------------------------------

std::vector<PairEstimates> monte_carlo_pairs(std::span<const std::pair<Subspace, Subspace>> pairs, std::uint64_t m,
                                             std::span<const std::uint64_t> seeds, int threads) {
  if (pairs.empty()) return {};
  std::vector<Subspace> flat;
  flat.reserve(2 * pairs.size());
  for (const auto& [a, b] : pairs) {
    require_same_shape(a, b, "monte_carlo_pairs");
    flat.push_back(a);
    flat.push_back(b);
  }
  const int n = flat.front().n();

  std::vector<PairEstimates> out(pairs.size());
  for (auto& p : out) {
    p.kappa1.resize(seeds.size());
    p.kappa2.resize(seeds.size());
    p.kappa2sym.resize(seeds.size());
    p.kappa3.resize(seeds.size());
  }

  parallel_for(seeds.size(), threads, [&](std::size_t s) {
    const RopEnsemble e{seeds[s], m, n};
    const RowMatrix values = rop_values(flat, e);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto row = [&](std::size_t r) {
        RealSketch sk{e, flat[r].k(), {}};
        sk.values.assign(values.row(r).data(), values.row(r).data() + values.cols());
        return DualSketch::from_real(std::move(sk));
      };
      const DualSketch x = row(2 * p);
      const DualSketch y = row(2 * p + 1);
      out[p].kappa1[s] = kappa1_approx(x.real, y.real);
      out[p].kappa2[s] = kappa2_approx(x.bits, y.real);
      out[p].kappa2sym[s] = kappa2_symmetrised(x, y);
      out[p].kappa3[s] = kappa3_approx(x.bits, y.bits);
    }
  });
  return out;
}

bool McReport::passed() const {
  auto ok = [](Verdict v) { return v != Verdict::fail; };
  for (const auto& r : rows)
    if (!ok(r.verdict)) return false;
  for (const auto& s : slopes)
    if (!ok(s.verdict)) return false;
  if (rotation && !ok(rotation->verdict)) return false;
  if (psd && !ok(psd->verdict)) return false;
  return true;
}

McReport mc_validate(const ExperimentConfig& config) {
  config.validate();
  const auto& mc = config.mc;
  const std::uint64_t base = config.seeds.front();
  McReport report;

  for (int k : mc.ks) {
    const auto kk = static_cast<std::uint64_t>(k);
    std::vector<std::pair<Subspace, Subspace>> pairs;
    if (k == 1) {
      const auto grid = mc.theta_grid.empty() ? default_theta_grid() : mc.theta_grid;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const double theta[] = {grid[p]};
        pairs.push_back(subspace_pair_with_angles(mc.n, theta, derive_seed(base, {kk, p})));
      }
    } else {
      // Random pairs with a spread of overlaps: B perturbs A with noise levels
      // from mild to nearly independent.
      for (int p = 0; p < mc.pairs_per_k; ++p) {
        const auto pp = static_cast<std::uint64_t>(p);
        const double frac = mc.pairs_per_k > 1 ? static_cast<double>(p) / (mc.pairs_per_k - 1) : 0.0;
        const double sigma = 0.1 + 1.4 * frac;
        Subspace a = random_subspace(mc.n, k, derive_seed(base, {kk, pp, 0}));
        Subspace b = perturb_subspace(a, sigma, derive_seed(base, {kk, pp, 1}));
        pairs.emplace_back(std::move(a), std::move(b));
      }
    }

    std::vector<PrincipalAngles> angles;
    std::vector<double> exact;
    for (const auto& [a, b] : pairs) {
      angles.push_back(principal_angles(a, b));
      exact.push_back(projection_kernel(a, b));
    }

    const std::size_t tested_points = pairs.size() * config.m_grid.size();
    const double z = static_cast<int>(tested_points) > mc.wide_after ? mc.z_wide : mc.z;

    for (std::uint64_t m : config.m_grid) {
      const auto est = monte_carlo_pairs(pairs, m, config.seeds, config.threads);
      std::vector<double> slope_x, slope_y;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        auto add = [&](const char* name, const std::vector<double>& xs, std::optional<double> cf,
                       std::optional<double> alt, bool tested) {
          const auto s = stats::summarize(xs);
          McRow row{k, static_cast<int>(p), angles[p].theta, name, m, s.mean, s.se, cf, alt, z,
                    Verdict::not_applicable};
          if (tested && cf) row.verdict = verdict_of(stats::within_se(s, *cf, z));
          report.rows.push_back(std::move(row));
        };
        add("kappa1", est[p].kappa1, expected_kappa(ExpectationKind::kappa1, angles[p]), std::nullopt, true);
        if (k == 1) {
          const double k2 = expected_kappa(ExpectationKind::kappa2_k1, angles[p]);
          add("kappa2", est[p].kappa2, k2, std::nullopt, true);
          add("kappa2sym", est[p].kappa2sym, k2, std::nullopt, true);
          add("kappa3", est[p].kappa3, expected_kappa(ExpectationKind::kappa3_k1, angles[p]), std::nullopt, true);
        } else {
          // Two candidate constants; the slope fit below decides between them.
          const double a = expected_kappa(ExpectationKind::kappa2_general_a, angles[p]);
          const double b = expected_kappa(ExpectationKind::kappa2_general_b, angles[p]);
          add("kappa2", est[p].kappa2, a, b, false);
          add("kappa2sym", est[p].kappa2sym, a, b, false);
          add("kappa3", est[p].kappa3, std::nullopt, std::nullopt, false);
          slope_x.push_back(exact[p]);
          slope_y.push_back(stats::summarize(est[p].kappa2).mean);
        }
      }
      if (k > 1) {
        const auto fit = stats::slope_through_origin(slope_x, slope_y);
        SlopeReport sr;
        sr.k = k;
        sr.m = m;
        sr.slope = fit.slope;
        sr.slope_se = fit.se;
        sr.candidate_a = c_k(k) * std::sqrt(2.0 / std::numbers::pi);
        sr.candidate_b = sr.candidate_a / k;
        sr.rel_error_a = std::abs(fit.slope - sr.candidate_a) / sr.candidate_a;
        sr.rel_error_b = std::abs(fit.slope - sr.candidate_b) / sr.candidate_b;
        const bool fits_a = sr.rel_error_a <= mc.slope_tolerance;
        const bool fits_b = sr.rel_error_b <= mc.slope_tolerance;
        sr.winner = fits_a && fits_b ? "both" : fits_a ? "a" : fits_b ? "b" : "none";
        sr.verdict = verdict_of(fits_a != fits_b);
        report.slopes.push_back(sr);
      }
    }
  }

  const std::uint64_t m_top = config.m_grid.back();
  if (mc.rotation_probe) {
    RotationProbe probe;
    probe.angles = mc.rotation_angles.empty() ? default_rotation_angles() : mc.rotation_angles;
    probe.m = m_top;
    probe.z = mc.rotation_z;
    for (int r = 0; r < mc.rotations; ++r) {
      const auto rr = static_cast<std::uint64_t>(r);
      const auto pair = subspace_pair_with_angles(mc.n, probe.angles, derive_seed(base, {0x5270, rr}));
      std::vector<std::uint64_t> seeds(mc.rotation_ensembles);
      for (int e = 0; e < mc.rotation_ensembles; ++e) {
        seeds[e] = derive_seed(base, {0x5271, rr, static_cast<std::uint64_t>(e)});
      }
      const auto est = monte_carlo_pairs(std::span(&pair, 1), m_top, seeds, config.threads);
      const auto s = stats::summarize(est.front().kappa3);
      probe.means.push_back(s.mean);
      probe.ses.push_back(s.se);
    }
    for (std::size_t i = 0; i < probe.means.size(); ++i) {
      for (std::size_t j = i + 1; j < probe.means.size(); ++j) {
        const double se = std::hypot(probe.ses[i], probe.ses[j]);
        const double diff = std::abs(probe.means[i] - probe.means[j]);
        const double zz = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        probe.max_pairwise_z = std::max(probe.max_pairwise_z, zz);
      }
    }
    probe.verdict = verdict_of(probe.max_pairwise_z <= probe.z);
    report.rotation = probe;
  }

  if (mc.psd_probe) {
    PsdProbe probe;
    probe.lines = mc.psd_lines;
    probe.m = m_top;
    probe.threshold = mc.psd_threshold;
    std::vector<Subspace> lines;
    for (int i = 0; i < mc.psd_lines; ++i) {
      lines.push_back(random_subspace(mc.n, 1, derive_seed(base, {0x9e5d, static_cast<std::uint64_t>(i)})));
    }
    const RopEnsemble e{derive_seed(base, {0x9e5e}), m_top, mc.n};
    std::vector<BitSketch> bits;
    for (const auto& r : rop_sketch_batch(lines, e)) bits.push_back(binarize(r));
    probe.min_eigenvalue = min_eigenvalue(approx_gram(std::span<const BitSketch>(bits)).values);
    probe.verdict = verdict_of(probe.min_eigenvalue >= probe.threshold);
    report.psd = probe;
  }
  return report;
}

void write_mc_csv(std::ostream& os, const McReport& report) {
  std::size_t kmax = 1;
  for (const auto& r : report.rows) kmax = std::max(kmax, r.theta.size());
  os << "schema_version,k,point";
  for (std::size_t i = 0; i < kmax; ++i) os << ",theta_" << (i + 1);
  os << ",estimator,m,estimator_mean,estimator_se,closed_form,closed_form_alt,z,verdict\n";
  os << std::setprecision(12);
  for (const auto& r : report.rows) {
    os << kReportSchemaVersion << ',' << r.k << ',' << r.point;
    for (std::size_t i = 0; i < kmax; ++i) {
      os << ',';
      if (i < r.theta.size()) os << r.theta[i];
    }
    os << ',' << r.estimator << ',' << r.m << ',' << r.mean << ',' << r.se << ',';
    if (r.closed_form) os << *r.closed_form;
    os << ',';
    if (r.closed_form_alt) os << *r.closed_form_alt;
    os << ',' << r.z << ',' << to_string(r.verdict) << '\n';
  }
}

json to_json(const McReport& report, const ExperimentConfig& config) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json jr{{"k", r.k},     {"point", r.point}, {"theta", r.theta}, {"estimator", r.estimator},
            {"m", r.m},     {"mean", r.mean},   {"se", r.se},       {"z", r.z},
            {"verdict", to_string(r.verdict)}};
    jr["closed_form"] = r.closed_form ? json(*r.closed_form) : json(nullptr);
    jr["closed_form_alt"] = r.closed_form_alt ? json(*r.closed_form_alt) : json(nullptr);
    rows.push_back(std::move(jr));
  }
  json slopes = json::array();
  for (const auto& s : report.slopes) {
    slopes.push_back({{"k", s.k},
                      {"m", s.m},
                      {"slope", s.slope},
                      {"slope_se", s.slope_se},
                      {"candidate_a", s.candidate_a},
                      {"candidate_b", s.candidate_b},
                      {"rel_error_a", s.rel_error_a},
                      {"rel_error_b", s.rel_error_b},
                      {"winner", s.winner},
                      {"verdict", to_string(s.verdict)}});
  }
  json out{{"schema_version", kReportSchemaVersion},
           {"experiment", "mc-validate"},
           {"config", to_json(config)},
           {"rows", std::move(rows)},
           {"slopes", std::move(slopes)},
           {"passed", report.passed()}};
  if (report.rotation) {
    const auto& r = *report.rotation;
    out["rotation_probe"] = {{"angles", r.angles}, {"m", r.m},
                             {"means", r.means},   {"ses", r.ses},
                             {"max_pairwise_z", r.max_pairwise_z}, {"z", r.z},
                             {"verdict", to_string(r.verdict)}};
  }
  if (report.psd) {
    const auto& p = *report.psd;
    out["psd_probe"] = {{"lines", p.lines},
                        {"m", p.m},
                        {"min_eigenvalue", p.min_eigenvalue},
                        {"threshold", p.threshold},
                        {"verdict", to_string(p.verdict)}};
  }
  return out;
}

// ---- classification ------------------------------------------------------------

const VariantSummary* ClassificationReport::find(const std::string& variant, std::uint64_t m) const {
  for (const auto& s : summary)
    if (s.variant == variant && s.m == m) return &s;
  return nullptr;
}

ClassificationReport run_classification(const SplitDataset& data, const ExperimentConfig& config) {
  config.validate();
  data.train.validate();
  data.test.validate();
  if (data.train.size() == 0 || data.test.size() == 0) throw DataError("classification needs train and test samples");
  const int classes = std::max(data.train.class_count, data.test.class_count);
  const int n = data.train.samples.front().n();

  ClassificationReport report;
  const auto start = Clock::now();
  const GramMatrix gram = gram_matrix(data.train.samples, KernelName::projection);
  const Eigen::MatrixXd cross = cross_kernel(data.test.samples, data.train.samples, KernelName::projection);
  KernelSvmParams kp;
  kp.c = config.classifier.c;
  const KernelSvmModel svm = train_kernel_svm(gram, data.train.labels, classes, kp);
  report.exact_svm = evaluate(svm, cross, data.test.labels);
  report.exact_svm_ms = elapsed_ms(start);
  // The exact kappa2 is a positive multiple of the projection kernel for
  // every k, so both give the same nearest-subspace argmax.
  const std::vector<int> exact_ns = nearest_subspace_predict(cross, data.train.labels);
  report.exact_ns = evaluate(exact_ns, data.test.labels, classes);

  std::vector<Subspace> all = data.train.samples;
  all.insert(all.end(), data.test.samples.begin(), data.test.samples.end());
  const Eigen::Index n_train = static_cast<Eigen::Index>(data.train.size());
  const Eigen::Index n_test = static_cast<Eigen::Index>(data.test.size());

  struct Job {
    std::uint64_t m;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto m : config.m_grid)
    for (auto s : config.seeds) jobs.push_back({m, s});
  std::vector<std::vector<RunRecord>> results(jobs.size());

  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const auto [m, seed] = jobs[j];
    const RopEnsemble e{seed, m, n};
    RowMatrix values = rop_values(all, e);
    auto& out = results[j];

    if (config.synth.nearest_subspace) {
      const auto t0 = Clock::now();
      const Eigen::MatrixXd sim = kappa2_block(values.topRows(n_train), values.bottomRows(n_test));
      const auto pred = nearest_subspace_predict(sim, data.train.labels);
      RunRecord r{"k2_ns", m, seed, evaluate(pred, data.test.labels, classes), 0.0, 0.0};
      std::size_t same = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) same += pred[i] == exact_ns[i];
      r.agreement = static_cast<double>(same) / static_cast<double>(pred.size());
      r.wall_time_ms = elapsed_ms(t0);
      out.push_back(std::move(r));
    }
    const bool svm_enabled =
        config.kind == ExperimentKind::imageset_classify ? config.images.svm : config.synth.svm;
    if (svm_enabled) {
      LinearSvmParams lp;
      lp.lambda = config.classifier.lambda;
      lp.epochs = config.classifier.epochs;
      const double scale = 1.0 / std::sqrt(static_cast<double>(m));
      {
        const auto t0 = Clock::now();
        const RowMatrix signs = values.unaryExpr([scale](double v) { return v >= 0.0 ? scale : -scale; });
        lp.shuffle_seed = derive_seed(seed, {m, 3});
        const auto model = train_linear_svm(signs.topRows(n_train), data.train.labels, classes, lp);
        out.push_back({"k3_svm", m, seed, evaluate(model, signs.bottomRows(n_test), data.test.labels), -1.0,
                       elapsed_ms(t0)});
      }
      {
        const auto t0 = Clock::now();
        values *= scale;
        lp.shuffle_seed = derive_seed(seed, {m, 1});
        const auto model = train_linear_svm(values.topRows(n_train), data.train.labels, classes, lp);
        out.push_back({"k1_svm", m, seed, evaluate(model, values.bottomRows(n_test), data.test.labels), -1.0,
                       elapsed_ms(t0)});
      }
    }
  });

  for (auto& r : results)
    for (auto& rec : r) report.runs.push_back(std::move(rec));

  for (const char* variant : {"k1_svm", "k3_svm", "k2_ns"}) {
    for (auto m : config.m_grid) {
      std::vector<double> acc, agree;
      for (const auto& r : report.runs) {
        if (r.variant != variant || r.m != m) continue;
        acc.push_back(r.report.accuracy);
        if (r.agreement >= 0.0) agree.push_back(r.agreement);
      }
      if (acc.empty()) continue;
      const auto s = stats::summarize(acc);
      VariantSummary vs{variant, m, s.mean, s.stddev, -1.0};
      if (!agree.empty()) vs.mean_agreement = stats::summarize(agree).mean;
      report.summary.push_back(vs);
    }
  }
  return report;
}

ClassificationReport synth_experiment(const ExperimentConfig& config) {
  SyntheticSpec spec = config.synth.data;
  spec.seed = config.synth.data_seed;
  return run_classification(synth_benchmark(spec), config);
}

ClassificationReport imageset_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!std::filesystem::exists(config.images.manifest)) {
    throw DataError("dataset not supplied: " + config.images.manifest.string());
  }
  const DatasetManifest manifest = load_manifest(config.images.manifest);
  const SplitDataset data = materialise_split(manifest);
  if (data.train.size() == 0 || data.test.size() == 0) {
    throw DataError("manifest " + config.images.manifest.string() + " needs both train and test entries");
  }
  return run_classification(data, config);
}

json to_json(const AccuracyReport& r) {
  json confusion = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
    confusion.push_back(std::move(row));
  }
  return json{{"accuracy", r.accuracy}, {"confusion", std::move(confusion)}};
}

json to_json(const ClassificationReport& report, const ExperimentConfig& config) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    json jr = to_json(r.report);
    jr["variant"] = r.variant;
    jr["m"] = r.m;
    jr["seed"] = r.seed;
    jr["wall_time_ms"] = r.wall_time_ms;
    if (r.agreement >= 0.0) jr["agreement"] = r.agreement;
    runs.push_back(std::move(jr));
  }
  json summary = json::array();
  for (const auto& s : report.summary) {
    json js{{"variant", s.variant}, {"m", s.m}, {"mean_accuracy", s.mean_accuracy}, {"std_accuracy", s.std_accuracy}};
    if (s.mean_agreement >= 0.0) js["mean_agreement"] = s.mean_agreement;
    summary.push_back(std::move(js));
  }
  json exact_svm = to_json(report.exact_svm);
  exact_svm["variant"] = "k1_exact_svm";
  exact_svm["wall_time_ms"] = report.exact_svm_ms;
  json exact_ns = to_json(report.exact_ns);
  exact_ns["variant"] = "k2_exact_ns";
  return json{{"schema_version", kReportSchemaVersion},
              {"experiment", to_string(config.kind)},
              {"config", to_json(config)},
              {"baseline", {{"exact_svm", std::move(exact_svm)}, {"exact_ns", std::move(exact_ns)}}},
              {"runs", std::move(runs)},
              {"summary", std::move(summary)}};
}

// ---- bench ------------------------------------------------------------------------

BenchReport bench(const ExperimentConfig& config) {
  config.validate();
  BenchReport report;
  for (std::uint64_t m : config.bench.storage_m) {
    const RopEnsemble e{config.seeds.front(), m, 1};
    const RealSketch real{e, 1, std::vector<double>(m, 0.0)};
    const BitSketch bits = binarize(real);
    std::ostringstream real_os, bits_os;
    write_sketch(real_os, real);
    write_sketch(bits_os, bits);
    StorageRow row;
    row.m = m;
    row.real_payload = m * sizeof(double);
    row.bits_payload = word_count(m) * sizeof(std::uint64_t);
    row.real_file = real_os.str().size();
    row.bits_file = bits_os.str().size();
    row.payload_ratio = static_cast<double>(row.real_payload) / static_cast<double>(row.bits_payload);
    report.storage.push_back(row);
  }
  for (std::uint64_t m : config.m_grid) {
    for (std::uint64_t size : config.bench.dataset_sizes) {
      GramRow row;
      row.dataset_size = size;
      row.m = m;
      row.gram_bytes = size * size * sizeof(double);
      row.real_sketch_bytes = size * m * sizeof(double);
      row.bit_sketch_bytes = size * word_count(m) * sizeof(std::uint64_t);
      report.gram.push_back(row);
    }
  }

  const std::uint64_t m = config.bench.timing_m;
  report.timing_m = m;
  if (m > 0 && config.bench.timing_repeats > 0) {
    const RopEnsemble e{config.seeds.front(), m, 1};
    SplitMix64 bitsrc(derive_seed(config.seeds.front(), {0xbe7c}));
    std::vector<double> xr(m), yr(m);
    for (std::uint64_t i = 0; i < m; ++i) {
      xr[i] = bitsrc.uniform() - 0.5;
      yr[i] = bitsrc.uniform() - 0.5;
    }
    const BitSketch xb = pack_signs(xr, e, 1);
    const BitSketch yb = pack_signs(yr, e, 1);
    const Eigen::Map<const Eigen::VectorXd> xv(xr.data(), m), yv(yr.data(), m);
    const int reps = config.bench.timing_repeats;

    volatile std::int64_t sink_i = 0;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) sink_i = sink_i + pm1_dot(xb, yb);
    report.pm1_ns_per_call = elapsed_ms(t0) * 1e6 / reps;

    volatile double sink_d = 0.0;
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) sink_d = sink_d + xv.dot(yv);
    report.float_ns_per_call = elapsed_ms(t0) * 1e6 / reps;

    report.throughput_ratio = report.pm1_ns_per_call > 0.0 ? report.float_ns_per_call / report.pm1_ns_per_call : 0.0;
    report.throughput_target_met = report.throughput_ratio >= config.bench.throughput_target;
  }
  return report;
}

json to_json(const BenchReport& report, const ExperimentConfig& config) {
  json storage = json::array();
  for (const auto& s : report.storage) {
    storage.push_back({{"m", s.m},
                       {"real_payload_bytes", s.real_payload},
                       {"bits_payload_bytes", s.bits_payload},
                       {"real_file_bytes", s.real_file},
                       {"bits_file_bytes", s.bits_file},
                       {"header_bytes", kSketchHeaderBytes},
                       {"payload_ratio", s.payload_ratio}});
  }
  json gram = json::array();
  for (const auto& g : report.gram) {
    // Per-sample sketch bytes vs the N * 8 bytes each sample adds to a Gram row.
    gram.push_back({{"dataset_size", g.dataset_size},
                    {"m", g.m},
                    {"gram_bytes", g.gram_bytes},
                    {"real_sketch_bytes", g.real_sketch_bytes},
                    {"bit_sketch_bytes", g.bit_sketch_bytes},
                    {"real_sketches_smaller", g.real_sketch_bytes < g.gram_bytes},
                    {"bit_sketches_smaller", g.bit_sketch_bytes < g.gram_bytes},
                    {"real_crossover_n", g.m},
                    {"bit_crossover_n", word_count(g.m)}});
  }
  return json{{"schema_version", kReportSchemaVersion},
              {"experiment", "bench"},
              {"config", to_json(config)},
              {"storage", std::move(storage)},
              {"gram_vs_sketch", std::move(gram)},
              {"timing",
               {{"m", report.timing_m},
                {"pm1_dot_ns", report.pm1_ns_per_call},
                {"float_dot_ns", report.float_ns_per_call},
                {"throughput_ratio", report.throughput_ratio},
                {"throughput_target", config.bench.throughput_target},
                {"target_met", report.throughput_target_met}}}};
}

}  // namespace grassketch
