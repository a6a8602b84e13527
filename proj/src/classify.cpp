#include "grassketch/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grassketch/rng.hpp"

namespace grassketch {
namespace {

void check_labels(std::span<const int> labels, int class_count, Eigen::Index n, const char* what) {
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DimensionError(std::string(what) + ": label count does not match sample count");
  }
  if (class_count < 2) throw DataError(std::string(what) + ": need at least two classes");
  std::vector<bool> seen(class_count, false);
  for (int l : labels) {
    if (l < 0 || l >= class_count) throw DataError(std::string(what) + ": label out of range");
    seen[l] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    throw DataError(std::string(what) + ": training data contains a single class");
  }
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

RowMatrix feature_matrix(std::span<const RealSketch> sketches) {
  if (sketches.empty()) return {};
  const auto m = sketches.front().m();
  RowMatrix out(sketches.size(), static_cast<Eigen::Index>(m));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    require_same_ensemble(sketches.front().ensemble, sketches[i].ensemble, "feature_matrix");
    out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(sketches[i].values.data(), m) * scale;
  }
  return out;
}

RowMatrix feature_matrix(std::span<const BitSketch> sketches) {
  if (sketches.empty()) return {};
  const auto m = sketches.front().m();
  RowMatrix out(sketches.size(), static_cast<Eigen::Index>(m));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    require_same_ensemble(sketches.front().ensemble, sketches[i].ensemble, "feature_matrix");
    for (std::uint64_t f = 0; f < m; ++f) out(i, f) = sketches[i].bit(f) ? scale : -scale;
  }
  return out;
}

RowMatrix sketch_features(std::span<const Subspace> us, const RopEnsemble& e, FeatureKind kind) {
  RowMatrix values = rop_values(us, e);
  const double scale = 1.0 / std::sqrt(static_cast<double>(e.m));
  if (kind == FeatureKind::real) {
    values *= scale;
  } else {
    values = values.unaryExpr([scale](double v) { return v >= 0.0 ? scale : -scale; });
  }
  return values;
}

// ---- linear SVM -------------------------------------------------------------

Eigen::VectorXd LinearSvmModel::scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != feature_dim()) throw DimensionError("LinearSvmModel: feature dimension mismatch");
  return weights * x.transpose() + bias;
}

std::vector<int> LinearSvmModel::predict(const Eigen::Ref<const RowMatrix>& features) const {
  if (features.cols() != feature_dim()) throw DimensionError("LinearSvmModel: feature dimension mismatch");
  const Eigen::MatrixXd s = (features * weights.transpose()).rowwise() + bias.transpose();
  return argmax_rows(s);
}

LinearSvmModel train_linear_svm(const Eigen::Ref<const RowMatrix>& features, std::span<const int> labels, int class_count,
                                const LinearSvmParams& params) {
  const Eigen::Index n = features.rows();
  const Eigen::Index dim = features.cols();
  check_labels(labels, class_count, n, "train_linear_svm");
  if (n == 0 || dim == 0) throw DimensionError("train_linear_svm: empty feature matrix");
  if (params.epochs < 1) throw ConfigError("train_linear_svm: epochs must be >= 1");

  LinearSvmModel model;
  model.lambda = params.lambda > 0.0 ? params.lambda : 1.0 / static_cast<double>(n);
  model.epochs = params.epochs;
  model.shuffle_seed = params.shuffle_seed;
  model.class_count = class_count;
  model.bias_scale = features.rowwise().norm().mean();
  if (!(model.bias_scale > 0.0)) model.bias_scale = 1.0;

  // With step 1/(lambda t) the Pegasos iterate after step t is
  // (1/(lambda t)) * sum of y_s x_s over violating steps s <= t, so only that
  // running sum is kept. The average of iterates 2..T+1 then weights the
  // violation at step s by (H_T - H_{s-1}) / (lambda T), H the harmonic numbers.
  const long long total = static_cast<long long>(params.epochs) * n;
  std::vector<double> harmonic(total + 1, 0.0);
  for (long long t = 1; t <= total; ++t) harmonic[t] = harmonic[t - 1] + 1.0 / static_cast<double>(t);

  RowMatrix running = RowMatrix::Zero(class_count, dim + 1);
  RowMatrix averaged = RowMatrix::Zero(class_count, dim + 1);
  Eigen::RowVectorXd x(dim + 1);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);

  long long t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(params.shuffle_seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index idx : order) {
      ++t;
      x.head(dim) = features.row(idx);
      x(dim) = model.bias_scale;
      const double current_scale = t > 1 ? 1.0 / (model.lambda * static_cast<double>(t - 1)) : 0.0;
      const double avg_coef = (harmonic[total] - harmonic[t - 1]) / (model.lambda * static_cast<double>(total));
      const Eigen::VectorXd margins = running * x.transpose();
      for (int c = 0; c < class_count; ++c) {
        const double y = labels[idx] == c ? 1.0 : -1.0;
        if (y * margins(c) * current_scale < 1.0) {
          running.row(c) += y * x;
          averaged.row(c) += (y * avg_coef) * x;
        }
      }
    }
  }

  model.weights = averaged.leftCols(dim);
  model.bias = averaged.col(dim) * model.bias_scale;
  return model;
}

// ---- kernel SVM -------------------------------------------------------------

Eigen::MatrixXd KernelSvmModel::decision(const Eigen::MatrixXd& cross) const {
  if (cross.cols() != training_size()) throw DimensionError("KernelSvmModel: cross kernel has wrong column count");
  return (cross * coef.transpose()).rowwise() + bias.transpose();
}

std::vector<int> KernelSvmModel::predict(const Eigen::MatrixXd& cross) const { return argmax_rows(decision(cross)); }

KernelSvmModel train_kernel_svm(const GramMatrix& gram, std::span<const int> labels, int class_count,
                                const KernelSvmParams& params) {
  const Eigen::Index n = gram.values.rows();
  if (gram.values.cols() != n) throw DimensionError("train_kernel_svm: Gram matrix is not square");
  check_labels(labels, class_count, n, "train_kernel_svm");
  if (!(params.c > 0.0)) throw ConfigError("train_kernel_svm: C must be positive");

  KernelSvmModel model;
  model.class_count = class_count;
  Eigen::MatrixXd k = gram.values;
  const double lowest = min_eigenvalue(k);
  if (lowest < -params.psd_tol) {
    throw DataError("train_kernel_svm: Gram matrix is not positive semidefinite (min eigenvalue " +
                    std::to_string(lowest) + ")");
  }
  if (lowest < 0.0) {
    model.diagonal_shift = -lowest;
    k.diagonal().array() += model.diagonal_shift;
  }
  k.array() += 1.0;  // bias through the augmented kernel

  model.coef = Eigen::MatrixXd::Zero(class_count, n);
  model.bias = Eigen::VectorXd::Zero(class_count);
  model.converged = true;

  for (int c = 0; c < class_count; ++c) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[i] == c ? 1.0 : -1.0;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // f_i = sum_j alpha_j y_j k_ij

    int pass = 0;
    bool converged = false;
    for (; pass < params.max_passes && !converged; ++pass) {
      double max_violation = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double grad = y(i) * f(i) - 1.0;
        double projected = grad;
        if (alpha(i) <= 0.0) projected = std::min(grad, 0.0);
        else if (alpha(i) >= params.c) projected = std::max(grad, 0.0);
        max_violation = std::max(max_violation, std::abs(projected));
        if (std::abs(projected) < 1e-14) continue;
        const double updated = std::clamp(alpha(i) - grad / k(i, i), 0.0, params.c);
        const double delta = updated - alpha(i);
        if (delta == 0.0) continue;
        alpha(i) = updated;
        f.noalias() += (delta * y(i)) * k.col(i);
      }
      converged = max_violation < params.tol;
    }
    model.passes = std::max(model.passes, pass);
    model.converged = model.converged && converged;
    model.coef.row(c) = alpha.cwiseProduct(y).transpose();
    model.bias(c) = model.coef.row(c).sum();
  }
  return model;
}

// ---- nearest subspace / evaluation -----------------------------------------

std::vector<int> nearest_subspace_predict(const Eigen::MatrixXd& similarity, std::span<const int> train_labels) {
  if (similarity.cols() == 0) throw DataError("nearest_subspace_predict: empty training set");
  if (static_cast<Eigen::Index>(train_labels.size()) != similarity.cols()) {
    throw DimensionError("nearest_subspace_predict: label count does not match similarity columns");
  }
  std::vector<int> out(similarity.rows());
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < similarity.cols(); ++j)
      if (similarity(i, j) > similarity(i, best)) best = j;
    out[i] = train_labels[best];
  }
  return out;
}

AccuracyReport evaluate(std::span<const int> predicted, std::span<const int> truth, int class_count) {
  if (predicted.size() != truth.size()) throw DimensionError("evaluate: prediction and label counts differ");
  AccuracyReport r;
  r.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 || predicted[i] >= class_count) {
      throw DataError("evaluate: label out of range");
    }
    ++r.confusion(truth[i], predicted[i]);
    if (truth[i] == predicted[i]) ++correct;
  }
  r.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  return r;
}

AccuracyReport evaluate(const LinearSvmModel& model, const Eigen::Ref<const RowMatrix>& features, std::span<const int> truth) {
  return evaluate(model.predict(features), truth, model.class_count);
}

AccuracyReport evaluate(const KernelSvmModel& model, const Eigen::MatrixXd& cross, std::span<const int> truth) {
  return evaluate(model.predict(cross), truth, model.class_count);
}

}  // namespace grassketch
