#include "sector_embed/classifier.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/random.hpp"
#include "sector_embed/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sector_embed {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (std::size_t y : labels) ++counts.at(y);
  return counts;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ValidationError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t y : labels) {
    if (y >= class_names.size()) throw ValidationError("label index " + std::to_string(y) + " out of range");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite feature");
  }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.class_names = data.class_names;
  out.features = Matrix(rows.size(), data.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = data.features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(data.labels[rows[r]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SMOTE

SmoteResult smote(const Dataset& data, std::size_t k_neighbors, std::uint64_t seed) {
  data.validate();
  if (k_neighbors == 0) throw ConfigError("SMOTE k_neighbors must be positive");
  const std::size_t dim = data.features.cols();
  const auto counts = data.class_counts();
  const std::size_t majority = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());

  SmoteResult out;
  out.data = data;
  Rng rng(seed);
  std::vector<double> synthetic(dim);

  for (std::size_t cls = 0; cls < counts.size(); ++cls) {
    const std::size_t count = counts[cls];
    if (count == 0 || count == majority) continue;
    if (count < 2) {
      throw ValidationError("SMOTE: class '" + data.class_names[cls] +
                            "' has a single sample, no neighbour to interpolate toward");
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == cls) members.push_back(i);
    }
    const std::size_t k = std::min(k_neighbors, count - 1);

    // k nearest same-class neighbours of every member
    std::vector<std::vector<std::size_t>> neighbors(count);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t m = 0; m < count; ++m) {
      dist.clear();
      const auto xm = data.features.row(members[m]);
      for (std::size_t o = 0; o < count; ++o) {
        if (o == m) continue;
        const auto xo = data.features.row(members[o]);
        double d2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) d2 += (xm[c] - xo[c]) * (xm[c] - xo[c]);
        dist.emplace_back(d2, members[o]);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t j = 0; j < k; ++j) neighbors[m].push_back(dist[j].second);
    }

    for (std::size_t s = 0; s < majority - count; ++s) {
      const std::size_t m = s % count;
      const std::size_t base = members[m];
      const std::size_t nn = neighbors[m][rng.below(k)];
      const double u = rng.uniform();
      const auto xb = data.features.row(base);
      const auto xn = data.features.row(nn);
      for (std::size_t c = 0; c < dim; ++c) synthetic[c] = xb[c] + u * (xn[c] - xb[c]);
      out.data.features.append_row(synthetic);
      out.data.labels.push_back(cls);
      out.origins.push_back({base, nn, u});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear SVM

void SvmParams::validate() const {
  if (!(reg_lambda > 0.0) || !std::isfinite(reg_lambda)) throw ConfigError("reg_lambda must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("svm learning_rate must be positive");
}

std::string SvmParams::fingerprint() const {
  const std::string canonical = "linear_svm_ovr;lambda=" + textio::format_double(reg_lambda) +
                                ";lr=" + textio::format_double(learning_rate) +
                                ";epochs=" + std::to_string(epochs) + ";seed=" + std::to_string(seed) +
                                ";standardize=" + (standardize ? "1" : "0");
  return textio::fnv1a_hex(canonical);
}

namespace {

void standardize_into(const LinearModel& model, std::span<const double> x, std::span<double> out) {
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - model.feature_mean[c]) / model.feature_scale[c];
}

}  // namespace

SvmFit train_linear_svm(const Dataset& data, const SvmParams& params) {
  data.validate();
  params.validate();
  const std::size_t n = data.size();
  const std::size_t dim = data.features.cols();
  const std::size_t classes = data.class_names.size();
  const auto counts = data.class_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (classes < 2 || present < 2) throw ValidationError("linear SVM needs training data from at least 2 classes");

  SvmFit fit;
  LinearModel& model = fit.model;
  model.class_names = data.class_names;
  model.config_fingerprint = params.fingerprint();
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 1.0);
  if (params.standardize) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dim; ++c) model.feature_mean[c] += data.features(i, c);
    }
    for (double& m : model.feature_mean) m /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = data.features(i, c) - model.feature_mean[c];
        var[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < dim; ++c) {
      const double sd = std::sqrt(var[c] / static_cast<double>(n));
      model.feature_scale[c] = sd > 0.0 ? sd : 1.0;
    }
  }
  Matrix x(n, dim);
  for (std::size_t i = 0; i < n; ++i) standardize_into(model, data.features.row(i), x.row(i));

  model.weights = Matrix(classes, dim);
  model.biases.assign(classes, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lambda = params.reg_lambda;
  const double lr = params.learning_rate;

  auto objective = [&](std::size_t k) {
    const auto w = model.weights.row(k);
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = data.labels[i] == k ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * (dot(w, x.row(i)) + model.biases[k]));
    }
    return lambda * dot(w, w) + hinge * inv_n;
  };
  auto total_objective = [&] {
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += objective(k);
    return sum;
  };

  fit.objective_trace.push_back(total_objective());
  std::vector<double> grad(dim);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t k = 0; k < classes; ++k) {
      auto w = model.weights.row(k);
      for (std::size_t c = 0; c < dim; ++c) grad[c] = 2.0 * lambda * w[c];
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y = data.labels[i] == k ? 1.0 : -1.0;
        const auto xi = x.row(i);
        if (y * (dot(w, xi) + model.biases[k]) < 1.0) {
          for (std::size_t c = 0; c < dim; ++c) grad[c] -= y * xi[c] * inv_n;
          grad_b -= y * inv_n;
        }
      }
      for (std::size_t c = 0; c < dim; ++c) w[c] -= lr * grad[c];
      model.biases[k] -= lr * grad_b;
    }
    fit.objective_trace.push_back(total_objective());
  }
  return fit;
}

std::vector<double> decision_scores(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ValidationError("feature vector has length " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.dim()));
  }
  std::vector<double> z(x.size());
  standardize_into(model, x, z);
  std::vector<double> scores(model.num_classes());
  for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = dot(model.weights.row(k), z) + model.biases[k];
  return scores;
}

std::size_t predict(const LinearModel& model, std::span<const double> x) {
  const auto scores = decision_scores(model, x);
  // max_element returns the first maximum: lowest index wins ties
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::vector<double> predict_proba(const LinearModel& model, std::span<const double> x) {
  auto p = decision_scores(model, x);
  const double max_score = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - max_score);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::string model_to_json(const LinearModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "sector-embed-linear-svm/1";
  j["config_fingerprint"] = model.config_fingerprint;
  j["class_names"] = model.class_names;
  auto weights = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < model.weights.rows(); ++k) {
    const auto r = model.weights.row(k);
    weights.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = model.biases;
  j["feature_mean"] = model.feature_mean;
  j["feature_scale"] = model.feature_scale;
  return j.dump(2) + '\n';
}

LinearModel model_from_json(std::string_view content) {
  LinearModel m;
  try {
    const auto j = nlohmann::json::parse(content);
    m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.biases = j.at("biases").get<std::vector<double>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    m.weights = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != m.weights.cols()) throw ValidationError("model weights are ragged");
      std::copy(rows[k].begin(), rows[k].end(), m.weights.row(k).begin());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (m.class_names.size() != m.biases.size() || m.weights.rows() != m.biases.size() ||
      m.feature_mean.size() != m.weights.cols() || m.feature_scale.size() != m.weights.cols()) {
    throw ValidationError("model file: inconsistent dimensions");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Metrics

ClassificationReport report_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                    std::span<const std::string> class_names) {
  if (y_true.size() != y_pred.size()) throw ValidationError("y_true and y_pred differ in length");
  const std::size_t classes = class_names.size();
  std::vector<std::size_t> tp(classes, 0), predicted(classes, 0), support(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= classes || y_pred[i] >= classes) throw ValidationError("label index out of range");
    ++support[y_true[i]];
    ++predicted[y_pred[i]];
    if (y_true[i] == y_pred[i]) {
      ++tp[y_true[i]];
      ++correct;
    }
  }
  ClassificationReport r;
  r.total = y_true.size();
  for (std::size_t k = 0; k < classes; ++k) {
    ClassMetrics m;
    m.class_name = class_names[k];
    m.support = support[k];
    m.precision = predicted[k] ? static_cast<double>(tp[k]) / static_cast<double>(predicted[k]) : 0.0;
    m.recall = support[k] ? static_cast<double>(tp[k]) / static_cast<double>(support[k]) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    r.per_class.push_back(std::move(m));
  }
  if (r.total > 0) {
    const double total = static_cast<double>(r.total);
    for (const auto& m : r.per_class) {
      const double w = static_cast<double>(m.support) / total;
      r.weighted_precision += w * m.precision;
      r.weighted_recall += w * m.recall;
      r.weighted_f1 += w * m.f1;
    }
    r.accuracy = static_cast<double>(correct) / total;
  }
  return r;
}

std::string report_to_json(const ClassificationReport& report) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& m : report.per_class) {
    nlohmann::ordered_json row;
    row["class"] = m.class_name;
    row["precision"] = m.precision;
    row["recall"] = m.recall;
    row["f1"] = m.f1;
    row["support"] = m.support;
    rows.push_back(std::move(row));
  }
  j["per_class"] = std::move(rows);
  j["weighted_avg"] = {{"precision", report.weighted_precision},
                       {"recall", report.weighted_recall},
                       {"f1", report.weighted_f1}};
  j["accuracy"] = report.accuracy;
  j["total"] = report.total;
  return j.dump(2) + '\n';
}

std::string report_to_text(const ClassificationReport& report) {
  std::size_t name_width = std::string_view("Overall Accuracy").size();
  for (const auto& m : report.per_class) name_width = std::max(name_width, m.class_name.size());
  auto pad_right = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  auto pad_left = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
  };
  auto num = [&](double v) { return pad_left(textio::format_fixed(v, 2), 11); };
  auto line = [&](const std::string& name, const std::string& p, const std::string& r, const std::string& f,
                  const std::string& s) {
    return pad_right(name, name_width) + p + r + f + pad_left(s, 9) + '\n';
  };

  std::string out = line("Industry Class", pad_left("Precision", 11), pad_left("Recall", 11),
                         pad_left("F1-Score", 11), "Support");
  for (const auto& m : report.per_class) {
    out += line(m.class_name, num(m.precision), num(m.recall), num(m.f1), std::to_string(m.support));
  }
  out += line("Weighted Avg", num(report.weighted_precision), num(report.weighted_recall),
              num(report.weighted_f1), std::to_string(report.total));
  out += line("Overall Accuracy", std::string(11, ' '), std::string(11, ' '), num(report.accuracy),
              std::to_string(report.total));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation protocols

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data) {
  std::vector<std::vector<std::size_t>> by_class(data.class_names.size());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  return by_class;
}

void run_fold(const Dataset& data, FoldTrace& fold, const SmoteParams& smote_params, std::uint64_t seed,
              const SvmParams& svm, std::vector<std::size_t>& predictions) {
  Dataset train = subset(data, fold.training_rows);
  if (smote_params.enabled) {
    auto balanced = smote(train, smote_params.k_neighbors, seed);
    fold.synthetic_rows = balanced.origins.size();
    train = std::move(balanced.data);
  }
  const auto fit = train_linear_svm(train, svm);
  for (std::size_t row : fold.validation_rows) predictions[row] = predict(fit.model, data.features.row(row));
}

}  // namespace

CvResult kfold_cv(const Dataset& data, std::size_t k, const SmoteParams& smote_params, std::uint64_t seed,
                  const SvmParams& svm) {
  data.validate();
  svm.validate();
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (k > data.size()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds dataset size " + std::to_string(data.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> fold_of(data.size());
  std::size_t dealt = 0;
  for (auto& rows : rows_by_class(data)) {
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t row : rows) fold_of[row] = dealt++ % k;
  }

  CvResult out;
  out.folds.resize(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[i] == f ? out.folds[f].validation_rows : out.folds[f].training_rows).push_back(i);
    }
  }
  out.predictions.assign(data.size(), 0);
  for (std::size_t f = 0; f < k; ++f) {
    run_fold(data, out.folds[f], smote_params, seed + 1 + f, svm, out.predictions);
  }
  out.report = report_metrics(data.labels, out.predictions, data.class_names);
  return out;
}

CvResult holdout_eval(const Dataset& data, double test_fraction, const SmoteParams& smote_params,
                      std::uint64_t seed, const SvmParams& svm) {
  data.validate();
  svm.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must be in (0, 1)");
  Rng rng(seed);
  FoldTrace fold;
  std::vector<char> is_test(data.size(), 0);
  const auto by_class = rows_by_class(data);
  for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
    auto rows = by_class[cls];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw ValidationError("cannot stratify: class '" + data.class_names[cls] + "' has fewer than 2 samples");
    }
    rng.shuffle(std::span<std::size_t>(rows));
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    for (std::size_t i = 0; i < n_test; ++i) is_test[rows[i]] = 1;
  }
  for (std::size_t i = 0; i < data.size(); ++i) (is_test[i] ? fold.validation_rows : fold.training_rows).push_back(i);

  CvResult out;
  out.predictions.assign(data.size(), 0);
  run_fold(data, fold, smote_params, seed + 1, svm, out.predictions);
  std::vector<std::size_t> y_true, y_pred;
  for (std::size_t row : fold.validation_rows) {
    y_true.push_back(data.labels[row]);
    y_pred.push_back(out.predictions[row]);
  }
  out.report = report_metrics(y_true, y_pred, data.class_names);
  out.folds.push_back(std::move(fold));
  return out;
}

}  // namespace sector_embed
