#pragma once

#include "sector_embed/context_gen.hpp"
#include "sector_embed/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sector_embed {

// Row i is the embedding of tickers[i]. The matrix serves both as the
// input lookup table and as the output projection before the softmax.
struct EmbeddingMatrix {
  std::vector<std::string> tickers;
  Matrix weights;  // |U| x N

  std::size_t size() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }
  std::span<const double> row(std::size_t i) const { return weights.row(i); }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

struct TrainConfig {
  std::size_t dim = 20;
  double learning_rate = 0.05;
  std::size_t epochs = 25;
  std::uint64_t seed = 0;
  std::optional<double> init_scale;  // defaults to 0.5 / dim
  bool shuffle_each_epoch = true;

  double effective_init_scale() const { return init_scale.value_or(0.5 / static_cast<double>(dim)); }
  void validate() const;
};

// Entries i.i.d. uniform on [-scale, +scale] from the seeded generator.
EmbeddingMatrix init_embeddings(std::span<const std::string> tickers, const TrainConfig& cfg);

// Element-wise mean of the context rows.
std::vector<double> hidden_layer(const Matrix& weights, std::span<const std::size_t> context);

// softmax(W h) with max subtraction.
std::vector<double> forward(const Matrix& weights, std::span<const double> hidden);

struct LossGradient {
  double loss = 0.0;
  Matrix gradient;  // same shape as W
};

// -log softmax(W h)[target] and its exact gradient with respect to W.
// With e = p - onehot(target), the output projection contributes e_j * h
// to every row j, and the averaging contributes (1/C) * W^T e to each
// context row.
LossGradient loss_and_gradient(const Matrix& weights, const ContextSet& set);

// Loss alone, for finite-difference checks and diagnostics.
double set_loss(const Matrix& weights, const ContextSet& set);

struct TrainResult {
  EmbeddingMatrix embeddings;
  std::vector<double> loss_trace;  // mean per-example loss of each epoch
};

// Per-example SGD with a constant learning rate. Throws NumericError on a
// non-finite loss, naming the set and epoch.
TrainResult train(const std::vector<ContextSet>& sets, std::span<const std::string> tickers,
                  const TrainConfig& cfg);

// Row-wise [a_i || b_i]. With `normalize`, each side's rows are scaled to
// unit length first (zero rows are left as is).
EmbeddingMatrix concat_embeddings(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                  bool normalize = false);

// TSV: header `ticker\tdim0\t...`, 17 significant digits.
std::string embeddings_to_tsv(const EmbeddingMatrix& e);
EmbeddingMatrix embeddings_from_tsv(std::string_view content);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

// CSV `epoch,mean_loss`, epochs numbered from 1.
std::string loss_trace_to_csv(std::span<const double> trace);

}  // namespace sector_embed
