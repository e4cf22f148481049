#pragma once

#include "sector_embed/matrix.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sector_embed {

using Date = std::chrono::year_month_day;

// Parses YYYY-MM-DD; throws ParseError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

struct LabeledCompany {
  std::string ticker;
  std::string name;
  std::string sector1;  // coarse label, e.g. "Finance"
  std::string sector2;  // fine label, e.g. "Major Bank"

  friend bool operator==(const LabeledCompany&, const LabeledCompany&) = default;
};

bool is_valid_ticker(std::string_view ticker);

// Companies ordered by ticker. Indices into a Universe are the company
// indices used throughout the pipeline.
class Universe {
 public:
  Universe() = default;
  // Sorts by ticker; throws ValidationError on an invalid or duplicate
  // ticker, or a sector1 outside `declared_sectors` when that is nonempty.
  explicit Universe(std::vector<LabeledCompany> companies,
                    std::vector<std::string> declared_sectors = {});

  std::size_t size() const noexcept { return companies_.size(); }
  bool empty() const noexcept { return companies_.empty(); }
  const LabeledCompany& operator[](std::size_t i) const { return companies_[i]; }
  const std::vector<LabeledCompany>& companies() const noexcept { return companies_; }
  std::vector<std::string> tickers() const;
  std::optional<std::size_t> index_of(std::string_view ticker) const;

  // Closed sector1 set: the declared set if one was given, otherwise the
  // sorted distinct values present.
  const std::vector<std::string>& sectors() const noexcept { return sectors_; }

  friend bool operator==(const Universe& a, const Universe& b) {
    return a.companies_ == b.companies_ && a.sectors_ == b.sectors_;
  }

 private:
  std::vector<LabeledCompany> companies_;
  std::vector<std::string> sectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Labels CSV: header `ticker,name,sector1,sector2`. An optional leading
// comment line `# sector1: A;B;C` declares the closed sector1 set.
Universe load_labels(const std::filesystem::path& path);
std::string labels_to_csv(const Universe& universe);

struct PricePanel {
  std::vector<std::string> tickers;
  std::vector<Date> dates;  // strictly increasing, size T+1
  Matrix prices;            // |U| x (T+1), all > 0
};

struct ReturnsPanel {
  std::vector<std::string> tickers;
  std::vector<Date> dates;  // date at the end of each return interval, size T (may be empty)
  Matrix returns;           // |U| x T
};

enum class PriceFormat { automatic, long_format, wide_format };

PriceFormat parse_price_format(std::string_view text);

struct PriceLoad {
  PricePanel panel;
  std::vector<std::string> warnings;  // one per excluded ticker
};

// Reads long (`date,ticker,close`) or wide (`date,T1,T2,...`) CSV. Tickers
// missing any date are excluded with a warning. Rows are sorted by ticker.
PriceLoad load_prices(const std::filesystem::path& path,
                      PriceFormat format = PriceFormat::automatic);

// Long-format CSV rendering of a panel.
std::string prices_to_csv(const PricePanel& panel);

// Throws ValidationError unless the panel is rectangular, dates strictly
// increase and every price is positive and finite.
void validate_panel(const PricePanel& panel);

ReturnsPanel compute_returns(const PricePanel& panel);

inline constexpr std::string_view kDefaultTickerPattern = R"(\(([A-Z]{1,5})\.[A-Z]\))";

// Regular expression with exactly one capture group holding the symbol.
class TickerPattern {
 public:
  explicit TickerPattern(std::string pattern = std::string(kDefaultTickerPattern));
  const std::string& source() const noexcept { return source_; }
  const std::regex& regex() const noexcept { return regex_; }

 private:
  std::string source_;
  std::regex regex_;
};

// Deduplicated universe indices in order of first mention.
std::vector<std::size_t> extract_tickers(std::string_view text, const TickerPattern& pattern,
                                         const Universe& universe);

struct NewsArticle {
  std::string article_id;
  std::optional<Date> date;
  std::string text;
  std::vector<std::size_t> mentions;  // distinct universe indices

  friend bool operator==(const NewsArticle&, const NewsArticle&) = default;
};

struct NewsLoad {
  std::vector<NewsArticle> articles;  // sorted by article_id
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Reads a directory of .txt files (id = filename) or a JSON-lines file
// with `id`, optional `date` and `text`.
NewsLoad load_news(const std::filesystem::path& path, const TickerPattern& pattern,
                   const Universe& universe);

// JSON lines with id, date, text and mentioned tickers.
std::string articles_to_jsonl(const std::vector<NewsArticle>& articles, const Universe& universe);
std::vector<NewsArticle> articles_from_jsonl(std::string_view content, const Universe& universe);

struct FilteredCorpus {
  Universe universe;
  PricePanel prices;  // rows aligned with universe
  std::vector<NewsArticle> articles;  // mentions index `universe`
  std::vector<std::string> warnings;
};

// Keeps companies that are labeled, have complete pricing, and appear in
// at least `min_mentions` distinct articles. `articles` must index
// `labels`. Throws ConfigError when nothing survives.
FilteredCorpus build_universe(const PricePanel& panel, const std::vector<NewsArticle>& articles,
                              const Universe& labels, long long min_mentions);

}  // namespace sector_embed
