#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grassketch/errors.hpp"
#include "grassketch/kernels_exact.hpp"
#include "grassketch/linalg.hpp"
#include "grassketch/sketch.hpp"

namespace grassketch {

template <class Sample>
struct LabeledDataset {
  std::vector<Sample> samples;
  std::vector<int> labels;
  int class_count = 0;
  std::vector<std::string> ids;  // optional, parallel to samples

  std::size_t size() const noexcept { return samples.size(); }

  void validate() const {
    if (samples.size() != labels.size()) throw DataError("dataset: samples and labels differ in length");
    if (!ids.empty() && ids.size() != samples.size()) throw DataError("dataset: ids and samples differ in length");
    for (int l : labels) {
      if (l < 0 || l >= class_count) {
        throw DataError("dataset: label " + std::to_string(l) + " outside [0, " + std::to_string(class_count) + ")");
      }
    }
  }
};

using SubspaceDataset = LabeledDataset<Subspace>;

enum class FeatureKind { real, pm1 };

/// Sketch features scaled by 1/sqrt(m), so that row dot products are
/// kappa1_approx (real) or kappa3_approx (pm1).
RowMatrix feature_matrix(std::span<const RealSketch> sketches);
RowMatrix feature_matrix(std::span<const BitSketch> sketches);
RowMatrix sketch_features(std::span<const Subspace> us, const RopEnsemble& e, FeatureKind kind);

// ---- linear SVM in sketch space -------------------------------------------

struct LinearSvmParams {
  double lambda = 0.0;  // <= 0 selects 1 / (training size)
  int epochs = 20;
  std::uint64_t shuffle_seed = 0;
};

/// One-vs-rest hinge-loss classifiers. The bias is an extra feature whose
/// constant value is the mean training row norm, so that rescaling all
/// features together with lambda (lambda' = c^2 lambda for features c x)
/// leaves the iterates equivalent.
struct LinearSvmModel {
  Eigen::MatrixXd weights;  // class_count x feature_dim
  Eigen::VectorXd bias;
  double bias_scale = 1.0;
  double lambda = 0.0;
  int epochs = 0;
  std::uint64_t shuffle_seed = 0;
  int class_count = 0;

  Eigen::Index feature_dim() const noexcept { return weights.cols(); }
  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<int> predict(const Eigen::Ref<const RowMatrix>& features) const;
};

/// Averaged stochastic subgradient (Pegasos, step 1 / (lambda t)).
LinearSvmModel train_linear_svm(const Eigen::Ref<const RowMatrix>& features, std::span<const int> labels, int class_count,
                                const LinearSvmParams& params = {});

// ---- kernel SVM on a precomputed Gram ------------------------------------

struct KernelSvmParams {
  double c = 1.0;
  double tol = 1e-3;       // max KKT violation at convergence
  int max_passes = 2000;
  double psd_tol = 1e-6;   // allowed negative eigenvalue before rejecting the Gram
};

struct KernelSvmModel {
  Eigen::MatrixXd coef;  // class_count x N, alpha_i * y_i
  Eigen::VectorXd bias;
  double diagonal_shift = 0.0;
  int passes = 0;
  bool converged = false;
  int class_count = 0;

  Eigen::Index training_size() const noexcept { return coef.cols(); }
  /// `cross` holds kernel values between queries (rows) and training samples (columns).
  Eigen::MatrixXd decision(const Eigen::MatrixXd& cross) const;
  std::vector<int> predict(const Eigen::MatrixXd& cross) const;
};

/// One-vs-rest dual coordinate descent on the hinge-loss dual with box [0, C].
/// The bias enters through the augmented kernel K + 1.
KernelSvmModel train_kernel_svm(const GramMatrix& gram, std::span<const int> labels, int class_count,
                                const KernelSvmParams& params = {});

// ---- nearest subspace ----------------------------------------------------

/// Label of the training sample with the highest similarity(query, sample).
/// Ties go to the lowest training index.
template <class Sample, class Query, class Similarity>
int nearest_subspace_classify(const LabeledDataset<Sample>& train, const Query& query, Similarity&& similarity) {
  if (train.samples.empty()) throw DataError("nearest_subspace_classify: empty training set");
  std::size_t best = 0;
  double best_value = similarity(query, train.samples[0]);
  for (std::size_t i = 1; i < train.samples.size(); ++i) {
    const double v = similarity(query, train.samples[i]);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return train.labels[best];
}

/// Row-wise argmax of a query x training similarity block, mapped to labels.
std::vector<int> nearest_subspace_predict(const Eigen::MatrixXd& similarity, std::span<const int> train_labels);

// ---- evaluation ----------------------------------------------------------

struct AccuracyReport {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows: true class, columns: predicted class
};

AccuracyReport evaluate(std::span<const int> predicted, std::span<const int> truth, int class_count);
AccuracyReport evaluate(const LinearSvmModel& model, const Eigen::Ref<const RowMatrix>& features, std::span<const int> truth);
AccuracyReport evaluate(const KernelSvmModel& model, const Eigen::MatrixXd& cross, std::span<const int> truth);

}  // namespace grassketch
