#include "sector_embed/context_gen.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sector_embed {

std::string_view to_string(Modality m) {
  return m == Modality::returns ? "returns" : "news";
}

Modality parse_modality(std::string_view text) {
  if (text == "returns") return Modality::returns;
  if (text == "news") return Modality::news;
  throw ParseError("unknown modality '" + std::string(text) + "'");
}

Quartiles daily_quartiles(std::span<const double> column) {
  if (column.size() < 4) {
    throw ValidationError("quartiles need at least 4 values, got " + std::to_string(column.size()));
  }
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  auto percentile = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size() || frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  };
  return {percentile(0.25), percentile(0.75)};
}

std::vector<ContextSet> returns_context_sets(const ReturnsPanel& returns, const ContextGenConfig& cfg) {
  const std::size_t n = returns.returns.rows();
  const std::size_t steps = returns.returns.cols();
  if (returns.tickers.size() != n) throw ValidationError("returns panel ticker count mismatch");
  if (cfg.context_size == 0) throw ConfigError("context size must be positive");
  if (cfg.context_size >= n) {
    throw ConfigError("context size " + std::to_string(cfg.context_size) +
                      " must be smaller than universe size " + std::to_string(n));
  }
  if (!returns.dates.empty() && returns.dates.size() != steps) {
    throw ValidationError("returns panel date count mismatch");
  }

  // Rank of each company in ticker order, used as the tie-break key.
  std::vector<std::size_t> by_ticker(n);
  std::iota(by_ticker.begin(), by_ticker.end(), 0);
  std::sort(by_ticker.begin(), by_ticker.end(),
            [&](std::size_t a, std::size_t b) { return returns.tickers[a] < returns.tickers[b]; });
  std::vector<std::size_t> ticker_rank(n);
  for (std::size_t r = 0; r < n; ++r) ticker_rank[by_ticker[r]] = r;

  std::vector<ContextSet> out;
  std::vector<double> column(n);
  std::vector<std::size_t> candidates;
  candidates.reserve(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) column[i] = returns.returns(i, t);
    Quartiles q{};
    if (cfg.iqr_filter) q = daily_quartiles(column);
    const std::string origin =
        returns.dates.empty() ? std::to_string(t) : format_date(returns.dates[t]);

    for (std::size_t target : by_ticker) {
      const double r = column[target];
      if (cfg.iqr_filter && !(r < q.q1 || r > q.q3)) continue;

      candidates.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != target) candidates.push_back(j);
      }
      auto closer = [&](std::size_t a, std::size_t b) {
        const double da = std::abs(r - column[a]);
        const double db = std::abs(r - column[b]);
        if (da != db) return da < db;
        return ticker_rank[a] < ticker_rank[b];
      };
      const auto mid = candidates.begin() + static_cast<std::ptrdiff_t>(cfg.context_size);
      std::partial_sort(candidates.begin(), mid, candidates.end(), closer);

      ContextSet set;
      set.target = target;
      set.context.assign(candidates.begin(), mid);
      set.modality = Modality::returns;
      set.origin = origin;
      out.push_back(std::move(set));
    }
  }
  return out;
}

std::vector<ContextSet> news_context_sets(const std::vector<NewsArticle>& articles,
                                          std::span<const std::string> tickers) {
  std::vector<const NewsArticle*> ordered;
  ordered.reserve(articles.size());
  for (const auto& a : articles) ordered.push_back(&a);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->article_id < b->article_id; });

  std::vector<ContextSet> out;
  for (const NewsArticle* a : ordered) {
    std::vector<std::size_t> mentions;
    for (std::size_t m : a->mentions) {
      if (m >= tickers.size()) throw ValidationError("article " + a->article_id + ": mention index out of range");
      if (std::find(mentions.begin(), mentions.end(), m) == mentions.end()) mentions.push_back(m);
    }
    if (mentions.size() < 2) continue;

    std::vector<std::size_t> targets = mentions;
    std::sort(targets.begin(), targets.end(),
              [&](std::size_t x, std::size_t y) { return tickers[x] < tickers[y]; });
    for (std::size_t target : targets) {
      ContextSet set;
      set.target = target;
      for (std::size_t m : mentions) {
        if (m != target) set.context.push_back(m);
      }
      set.modality = Modality::news;
      set.origin = a->article_id;
      out.push_back(std::move(set));
    }
  }
  return out;
}

void validate_context_set(const ContextSet& set, std::size_t universe_size, std::size_t context_size) {
  auto fail = [&](const std::string& why) {
    throw ValidationError("context set (target " + std::to_string(set.target) + ", origin " +
                          set.origin + "): " + why);
  };
  if (set.target >= universe_size) fail("target index out of range");
  if (set.context.empty()) fail("empty context");
  std::vector<std::size_t> sorted = set.context;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail("duplicate context company");
  if (sorted.back() >= universe_size) fail("context index out of range");
  if (std::binary_search(sorted.begin(), sorted.end(), set.target)) fail("target appears in its own context");
  if (set.modality == Modality::returns && context_size != 0 && set.context.size() != context_size) {
    fail("returns context has size " + std::to_string(set.context.size()) + ", expected " +
         std::to_string(context_size));
  }
}

std::string context_sets_to_jsonl(const std::vector<ContextSet>& sets, std::span<const std::string> tickers) {
  std::string out;
  for (const auto& s : sets) {
    nlohmann::ordered_json j;
    j["target"] = tickers[s.target];
    auto ctx = nlohmann::ordered_json::array();
    for (std::size_t c : s.context) ctx.push_back(tickers[c]);
    j["context"] = std::move(ctx);
    j["modality"] = to_string(s.modality);
    j["origin"] = s.origin;
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<ContextSet> context_sets_from_jsonl(std::string_view content, const Universe& universe) {
  std::vector<ContextSet> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](const nlohmann::json& t) {
    const auto idx = universe.index_of(t.get<std::string>());
    if (!idx) {
      throw ValidationError("context sets line " + std::to_string(line_no) + ": unknown ticker " +
                            t.get<std::string>());
    }
    return *idx;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ContextSet s;
      s.target = resolve(j.at("target"));
      for (const auto& c : j.at("context")) s.context.push_back(resolve(c));
      s.modality = parse_modality(j.at("modality").get<std::string>());
      s.origin = j.at("origin").get<std::string>();
      validate_context_set(s, universe.size());
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("context sets line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sector_embed
