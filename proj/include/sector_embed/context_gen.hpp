#pragma once

#include "sector_embed/corpus.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sector_embed {

enum class Modality { returns, news };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);

// One training example: the target company and the companies observed
// alongside it. `origin` is the return date (or time index when the panel
// carries no dates) for returns sets, and the article id for news sets.
struct ContextSet {
  std::size_t target = 0;
  std::vector<std::size_t> context;
  Modality modality = Modality::returns;
  std::string origin;

  friend bool operator==(const ContextSet&, const ContextSet&) = default;
};

struct ContextGenConfig {
  std::size_t context_size = 3;
  bool iqr_filter = true;
};

struct Quartiles {
  double q1 = 0.0;
  double q3 = 0.0;
};

// 25th/75th percentiles, linear interpolation between order statistics.
// Requires at least 4 values.
Quartiles daily_quartiles(std::span<const double> column);

// For every (company, day) whose return is strictly outside that day's
// [q1, q3] (or every pair when the filter is off), the C other companies
// with the smallest absolute return difference. Ties go to the
// lexicographically smaller ticker. Sorted by (day, target ticker).
std::vector<ContextSet> returns_context_sets(const ReturnsPanel& returns, const ContextGenConfig& cfg);

// n sets per article with n >= 2 distinct mentions, each mention once as
// target. Sorted by (article id, target ticker); `tickers` gives the
// ordering key for company indices.
std::vector<ContextSet> news_context_sets(const std::vector<NewsArticle>& articles,
                                          std::span<const std::string> tickers);

// Throws ValidationError naming the offending set.
void validate_context_set(const ContextSet& set, std::size_t universe_size, std::size_t context_size = 0);

std::string context_sets_to_jsonl(const std::vector<ContextSet>& sets, std::span<const std::string> tickers);
std::vector<ContextSet> context_sets_from_jsonl(std::string_view content, const Universe& universe);

}  // namespace sector_embed
