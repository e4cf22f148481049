#pragma once

#include "sector_embed/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sector_embed {

// Planted-structure market: returns within a sector share a common factor
// with the given pairwise correlation, and each article draws its
// companies from a single sector with probability co_mention_bias (else
// uniformly from the whole universe).
struct SyntheticSpec {
  std::size_t n_sectors = 4;
  std::size_t companies_per_sector = 10;
  std::size_t n_days = 500;
  std::size_t n_articles = 400;
  std::size_t mentions_per_article = 3;
  double intra_sector_return_correlation = 0.9;
  double co_mention_bias = 0.9;
  double daily_volatility = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticArticle {
  std::string id;
  Date date;
  std::string text;
};

struct SyntheticData {
  Universe labels;
  PricePanel prices;
  std::vector<SyntheticArticle> articles;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

std::string synthetic_news_to_jsonl(const std::vector<SyntheticArticle>& articles);

void write_synthetic(const SyntheticData& data, const std::filesystem::path& prices_path,
                     const std::filesystem::path& news_path, const std::filesystem::path& labels_path);

}  // namespace sector_embed
