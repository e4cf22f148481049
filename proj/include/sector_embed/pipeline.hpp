#pragma once

#include "sector_embed/analytics.hpp"
#include "sector_embed/classifier.hpp"
#include "sector_embed/context_gen.hpp"
#include "sector_embed/corpus.hpp"
#include "sector_embed/embedder.hpp"
#include "sector_embed/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sector_embed::pipeline {

namespace fs = std::filesystem;

enum class EmbeddingChoice { returns, news, multimodal };

EmbeddingChoice parse_embedding_choice(std::string_view text);
std::string_view to_string(EmbeddingChoice e);

struct PipelineConfig {
  // Relative paths resolve against this directory (the config file's).
  fs::path base_dir;

  fs::path prices;
  PriceFormat price_format = PriceFormat::automatic;
  fs::path news;
  fs::path labels;
  fs::path output_dir;

  long long min_mentions = 50;
  std::string ticker_pattern;

  ContextGenConfig contexts;
  TrainConfig train_returns;
  TrainConfig train_news;
  bool normalize_before_concat = false;

  EmbeddingChoice analytics_embedding = EmbeddingChoice::multimodal;
  Metric metric = Metric::cosine;
  double graph_threshold = 0.6;
  bool gexf = false;
  std::size_t knn_k = 5;
  double mismatch_min_sim = 0.6;
  SectorLevel mismatch_level = SectorLevel::sector1;

  std::size_t k_folds = 4;
  SvmParams svm;
  SmoteParams smote;
  std::uint64_t classify_seed = 7;
  double holdout_fraction = 0.25;

  SyntheticSpec synth;

  nlohmann::json document;  // fully merged configuration
  std::string hash;         // hash of `document`

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
  fs::path out(const std::string& name) const { return resolve(output_dir) / name; }
};

// Every key with its default value, grouped by section.
nlohmann::json default_config();

// Dotted names ("contexts.context_size", ...) of every configurable key.
std::vector<std::string> config_keys();

// Merges `user` over the defaults. Unknown keys or wrong value types throw
// ConfigError before anything runs.
PipelineConfig config_from_json(const nlohmann::json& user, const fs::path& base_dir,
                                const std::vector<std::pair<std::string, std::string>>& overrides = {});

PipelineConfig load_config(const fs::path& path,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {});

struct StageOutput {
  std::string summary;          // human-readable report for stdout
  std::vector<fs::path> files;  // files written by the stage
};

StageOutput cmd_synth(const PipelineConfig& cfg);
StageOutput cmd_ingest(const PipelineConfig& cfg);
StageOutput cmd_contexts(const PipelineConfig& cfg);
// modality: "returns", "news" or "both"
StageOutput cmd_train(const PipelineConfig& cfg, std::string_view modality);
StageOutput cmd_knn(const PipelineConfig& cfg, std::string_view query, std::optional<std::size_t> k = std::nullopt);
StageOutput cmd_graph(const PipelineConfig& cfg);
StageOutput cmd_mismatch(const PipelineConfig& cfg);
StageOutput cmd_classify(const PipelineConfig& cfg, const std::vector<EmbeddingChoice>& embeddings);

// ingest, contexts, train both, graph, mismatch, classify all.
StageOutput run_all(const PipelineConfig& cfg);

// Dataset over the ingested universe with sector1 labels, rows in
// universe order.
Dataset dataset_from_embeddings(const EmbeddingMatrix& e, const Universe& universe);

}  // namespace sector_embed::pipeline
