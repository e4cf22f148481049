#pragma once

#include "sector_embed/corpus.hpp"
#include "sector_embed/embedder.hpp"
#include "sector_embed/matrix.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sector_embed {

// Throws ValidationError on a zero-norm input or a length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

struct SimilarityMatrix {
  std::vector<std::string> tickers;
  Matrix values;  // symmetric, unit diagonal
};

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& e);

enum class Metric { cosine, euclidean, dot };

Metric parse_metric(std::string_view text);
std::string_view to_string(Metric m);

struct Neighbor {
  std::string ticker;
  double score = 0.0;  // similarity, or distance for Metric::euclidean

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Top-k companies for `query`, excluding itself. Cosine and dot rank by
// descending score, euclidean by ascending distance; ties go to the
// lexicographically smaller ticker.
std::vector<Neighbor> knn(const EmbeddingMatrix& e, std::string_view query, std::size_t k,
                          Metric metric = Metric::cosine);

std::string knn_to_text(std::string_view query, const std::vector<Neighbor>& neighbors,
                        const Universe* labels = nullptr, Metric metric = Metric::cosine);
std::string knn_to_json(std::string_view query, const std::vector<Neighbor>& neighbors,
                        const Universe* labels = nullptr, Metric metric = Metric::cosine);

enum class SectorLevel { sector1, sector2 };

SectorLevel parse_sector_level(std::string_view text);

struct Mismatch {
  std::string ticker_a;
  std::string ticker_b;
  double similarity = 0.0;
  std::string sector_a;
  std::string sector_b;

  friend bool operator==(const Mismatch&, const Mismatch&) = default;
};

// Pairs with similarity >= min_sim whose sector labels differ, highest
// similarity first.
std::vector<Mismatch> mismatches(const SimilarityMatrix& s, const Universe& labels, double min_sim,
                                 SectorLevel level = SectorLevel::sector1);

std::string mismatches_to_csv(const std::vector<Mismatch>& rows);

struct Edge {
  std::string source;  // source < target
  std::string target;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct EdgeList {
  std::vector<Edge> edges;
  double threshold = 0.0;
  std::size_t node_count = 0;

  // |edges| / (n (n - 1) / 2)
  double density() const;
};

// Edge for every unordered pair with similarity strictly above threshold.
EdgeList export_graph(const SimilarityMatrix& s, double threshold);

// Smallest threshold whose edge count is at most target_density of all pairs.
double density_threshold(const SimilarityMatrix& s, double target_density);

std::string edges_to_csv(const EdgeList& graph);
std::string edges_to_gexf(const EdgeList& graph, const SimilarityMatrix& s, const Universe* labels = nullptr);

}  // namespace sector_embed
