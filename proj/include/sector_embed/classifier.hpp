#pragma once

#include "sector_embed/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sector_embed {

struct Dataset {
  Matrix features;                  // rows x D
  std::vector<std::size_t> labels;  // one per row
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> class_counts() const;
  void validate() const;
};

// Provenance of one SMOTE row: x = x[base] + u * (x[neighbor] - x[base]).
struct SyntheticOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
};

struct SmoteResult {
  Dataset data;                         // originals first, in input order
  std::vector<SyntheticOrigin> origins;  // one per appended row
};

// Oversamples every class up to the majority count by interpolating
// toward one of the k nearest same-class neighbours (k capped at class
// size - 1). Classes absent from the data are left empty. Throws
// ValidationError for a minority class with a single sample.
SmoteResult smote(const Dataset& data, std::size_t k_neighbors, std::uint64_t seed);

struct SvmParams {
  double reg_lambda = 1e-3;
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const;
  std::string fingerprint() const;
};

// One-vs-rest linear classifier. Inputs are standardized with the
// training mean/scale before the weights apply.
struct LinearModel {
  Matrix weights;              // K x D
  std::vector<double> biases;  // K
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<std::string> class_names;
  std::string config_fingerprint;

  std::size_t num_classes() const noexcept { return biases.size(); }
  std::size_t dim() const noexcept { return weights.cols(); }
};

struct SvmFit {
  LinearModel model;
  // Sum over the K binary problems of lambda |w|^2 + mean hinge, before
  // the first update and after each epoch.
  std::vector<double> objective_trace;
};

// Full-batch subgradient descent on the L2-regularized hinge loss, one
// binary problem per class, starting from zero weights.
SvmFit train_linear_svm(const Dataset& data, const SvmParams& params);

std::vector<double> decision_scores(const LinearModel& model, std::span<const double> x);
std::size_t predict(const LinearModel& model, std::span<const double> x);
std::vector<double> predict_proba(const LinearModel& model, std::span<const double> x);

std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(std::string_view content);

struct ClassMetrics {
  std::string class_name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> per_class;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;
};

ClassificationReport report_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                    std::span<const std::string> class_names);

std::string report_to_json(const ClassificationReport& report);
// Per-class rows, weighted average and overall accuracy.
std::string report_to_text(const ClassificationReport& report);

struct SmoteParams {
  bool enabled = true;
  std::size_t k_neighbors = 5;
};

struct FoldTrace {
  std::vector<std::size_t> validation_rows;  // indices into the input dataset
  std::vector<std::size_t> training_rows;    // indices into the input dataset
  std::size_t synthetic_rows = 0;            // SMOTE rows added to training only
};

struct CvResult {
  ClassificationReport report;  // pooled over folds
  std::vector<std::size_t> predictions;  // per input row
  std::vector<FoldTrace> folds;
};

// Stratified k folds from a seeded shuffle; SMOTE runs on each fold's
// training rows only; predictions are pooled into one report.
CvResult kfold_cv(const Dataset& data, std::size_t k, const SmoteParams& smote_params, std::uint64_t seed,
                  const SvmParams& svm);

// Stratified split holding out round(test_fraction * count) rows of each
// class (at least 1, leaving at least 1 for training).
CvResult holdout_eval(const Dataset& data, double test_fraction, const SmoteParams& smote_params,
                      std::uint64_t seed, const SvmParams& svm);

// Rows of `features` selected by `rows`, keeping labels and class names.
Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

}  // namespace sector_embed
