#include "sector_embed/corpus.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace sector_embed {

namespace fs = std::filesystem;
using textio::split_csv;
using textio::trim;

Date parse_date(std::string_view text) {
  const std::string s = trim(text);
  auto digits = [&](std::size_t from, std::size_t n) {
    for (std::size_t i = from; i < from + n; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !digits(0, 4) || !digits(5, 2) ||
      !digits(8, 2)) {
    throw ParseError("invalid date '" + s + "' (expected YYYY-MM-DD)");
  }
  const Date d{std::chrono::year{std::stoi(s.substr(0, 4))},
               std::chrono::month{static_cast<unsigned>(std::stoi(s.substr(5, 2)))},
               std::chrono::day{static_cast<unsigned>(std::stoi(s.substr(8, 2)))}};
  if (!d.ok()) throw ParseError("invalid calendar date '" + s + "'");
  return d;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

bool is_valid_ticker(std::string_view ticker) {
  if (ticker.empty() || ticker.size() > 5) return false;
  return std::all_of(ticker.begin(), ticker.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

// ---------------------------------------------------------------------------
// Universe

Universe::Universe(std::vector<LabeledCompany> companies, std::vector<std::string> declared_sectors)
    : companies_(std::move(companies)) {
  std::sort(companies_.begin(), companies_.end(),
            [](const auto& a, const auto& b) { return a.ticker < b.ticker; });
  std::set<std::string> declared(declared_sectors.begin(), declared_sectors.end());
  std::set<std::string> present;
  for (std::size_t i = 0; i < companies_.size(); ++i) {
    const auto& c = companies_[i];
    if (!is_valid_ticker(c.ticker)) {
      throw ValidationError("invalid ticker '" + c.ticker + "' (expected 1-5 uppercase letters)");
    }
    if (!index_.emplace(c.ticker, i).second) {
      throw ValidationError("duplicate ticker '" + c.ticker + "'");
    }
    if (!declared.empty() && !declared.contains(c.sector1)) {
      throw ValidationError("ticker " + c.ticker + ": sector1 '" + c.sector1 +
                            "' not in declared sector set");
    }
    present.insert(c.sector1);
  }
  const auto& chosen = declared.empty() ? present : declared;
  sectors_.assign(chosen.begin(), chosen.end());
}

std::vector<std::string> Universe::tickers() const {
  std::vector<std::string> out;
  out.reserve(companies_.size());
  for (const auto& c : companies_) out.push_back(c.ticker);
  return out;
}

std::optional<std::size_t> Universe::index_of(std::string_view ticker) const {
  const auto it = index_.find(std::string(ticker));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Universe load_labels(const fs::path& path) {
  const auto lines = textio::read_lines(path);
  std::vector<std::string> declared;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() != '#') break;
    const auto colon = line.find(':');
    if (colon != std::string::npos && trim(line.substr(1, colon - 1)) == "sector1") {
      std::stringstream ss(line.substr(colon + 1));
      std::string item;
      while (std::getline(ss, item, ';')) {
        if (auto t = trim(item); !t.empty()) declared.push_back(t);
      }
    }
  }
  if (i == lines.size()) throw ParseError(path.string() + ": missing header");
  const auto header = split_csv(lines[i]);
  const std::vector<std::string> expected{"ticker", "name", "sector1", "sector2"};
  std::vector<std::string> got;
  for (const auto& h : header) got.push_back(trim(h));
  if (got != expected) {
    throw ParseError(path.string() + ":" + std::to_string(i + 1) +
                     ": expected header ticker,name,sector1,sector2");
  }
  std::vector<LabeledCompany> companies;
  for (++i; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    std::vector<std::string> f;
    try {
      f = split_csv(lines[i]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (f.size() != 4) throw ParseError(where + ": expected 4 fields, got " + std::to_string(f.size()));
    companies.push_back({trim(f[0]), trim(f[1]), trim(f[2]), trim(f[3])});
  }
  return Universe(std::move(companies), std::move(declared));
}

std::string labels_to_csv(const Universe& universe) {
  std::string out = "# sector1: ";
  for (std::size_t i = 0; i < universe.sectors().size(); ++i) {
    if (i) out += ';';
    out += universe.sectors()[i];
  }
  out += "\nticker,name,sector1,sector2\n";
  for (const auto& c : universe.companies()) {
    out += textio::csv_field(c.ticker) + ',' + textio::csv_field(c.name) + ',' +
           textio::csv_field(c.sector1) + ',' + textio::csv_field(c.sector2) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prices

PriceFormat parse_price_format(std::string_view text) {
  if (text == "auto") return PriceFormat::automatic;
  if (text == "long") return PriceFormat::long_format;
  if (text == "wide") return PriceFormat::wide_format;
  throw ConfigError("unknown price format '" + std::string(text) + "' (auto|long|wide)");
}

namespace {

struct RawPrices {
  // ticker -> date -> price
  std::map<std::string, std::map<Date, double>> cells;
  std::set<Date> dates;
};

double checked_price(std::string_view field, const std::string& where, const std::string& ticker) {
  const double v = textio::parse_double(field, where);
  if (!std::isfinite(v) || v <= 0.0) {
    throw ValidationError(where + ": non-positive or non-finite price " + trim(field) + " for " +
                          ticker);
  }
  return v;
}

void read_long(const std::vector<std::string>& lines, std::size_t header_line, const fs::path& path,
               RawPrices& raw) {
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    std::vector<std::string> f;
    try {
      f = split_csv(lines[i]);
      if (f.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(f.size()));
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    Date d;
    try {
      d = parse_date(f[0]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    const std::string ticker = trim(f[1]);
    if (ticker.empty()) throw ParseError(where + ": empty ticker");
    const double p = checked_price(f[2], where, ticker);
    if (!raw.cells[ticker].emplace(d, p).second) {
      throw ValidationError(where + ": duplicate row for (" + format_date(d) + ", " + ticker + ")");
    }
    raw.dates.insert(d);
  }
}

void read_wide(const std::vector<std::string>& lines, std::size_t header_line,
               const std::vector<std::string>& header, const fs::path& path, RawPrices& raw) {
  std::vector<std::string> tickers;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::string t = trim(header[c]);
    if (t.empty()) throw ParseError(path.string() + ":" + std::to_string(header_line + 1) + ": empty ticker column");
    if (raw.cells.contains(t)) throw ValidationError(path.string() + ": duplicate ticker column " + t);
    raw.cells[t];
    tickers.push_back(std::move(t));
  }
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    std::vector<std::string> f;
    Date d;
    try {
      f = split_csv(lines[i]);
      if (f.size() != header.size()) {
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(f.size()));
      }
      d = parse_date(f[0]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!raw.dates.insert(d).second) {
      throw ValidationError(where + ": duplicate date " + format_date(d));
    }
    for (std::size_t c = 1; c < f.size(); ++c) {
      if (trim(f[c]).empty()) continue;  // missing cell
      raw.cells[tickers[c - 1]].emplace(d, checked_price(f[c], where, tickers[c - 1]));
    }
  }
}

}  // namespace

PriceLoad load_prices(const fs::path& path, PriceFormat format) {
  const auto lines = textio::read_lines(path);
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw ParseError(path.string() + ": empty price file");
  std::vector<std::string> header;
  for (const auto& h : split_csv(lines[header_line])) header.push_back(trim(h));
  if (header.empty() || header[0] != "date") {
    throw ParseError(path.string() + ":" + std::to_string(header_line + 1) +
                     ": header must start with 'date'");
  }
  const bool looks_long = header == std::vector<std::string>{"date", "ticker", "close"};
  if (format == PriceFormat::automatic) {
    format = looks_long ? PriceFormat::long_format : PriceFormat::wide_format;
  }
  if (format == PriceFormat::long_format && !looks_long) {
    throw ParseError(path.string() + ": long format requires header date,ticker,close");
  }

  RawPrices raw;
  if (format == PriceFormat::long_format) read_long(lines, header_line, path, raw);
  else read_wide(lines, header_line, header, path, raw);

  PriceLoad out;
  out.panel.dates.assign(raw.dates.begin(), raw.dates.end());
  const std::size_t n_dates = out.panel.dates.size();
  std::vector<const std::map<Date, double>*> kept;
  for (const auto& [ticker, series] : raw.cells) {
    if (series.size() != n_dates) {
      out.warnings.push_back("excluding " + ticker + ": missing " +
                             std::to_string(n_dates - series.size()) + " of " +
                             std::to_string(n_dates) + " dates");
      continue;
    }
    out.panel.tickers.push_back(ticker);
    kept.push_back(&series);
  }
  if (kept.empty()) throw ValidationError(path.string() + ": no ticker has complete pricing");
  if (n_dates < 2) throw ValidationError(path.string() + ": need at least 2 dates to form returns");
  out.panel.prices = Matrix(kept.size(), n_dates);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    std::size_t c = 0;
    for (const auto& [date, price] : *kept[r]) out.panel.prices(r, c++) = price;
  }
  return out;
}

std::string prices_to_csv(const PricePanel& panel) {
  std::string out = "date,ticker,close\n";
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    const std::string d = format_date(panel.dates[t]);
    for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
      out += d + ',' + panel.tickers[i] + ',' + textio::format_double(panel.prices(i, t)) + '\n';
    }
  }
  return out;
}

void validate_panel(const PricePanel& panel) {
  if (panel.prices.rows() != panel.tickers.size()) {
    throw ValidationError("price panel row count does not match ticker count");
  }
  if (!panel.dates.empty() && panel.prices.cols() != panel.dates.size()) {
    throw ValidationError("price panel column count does not match date count");
  }
  for (std::size_t t = 1; t < panel.dates.size(); ++t) {
    if (!(panel.dates[t - 1] < panel.dates[t])) {
      throw ValidationError("price panel dates are not strictly increasing at " +
                            format_date(panel.dates[t]));
    }
  }
  for (std::size_t i = 0; i < panel.prices.rows(); ++i) {
    for (double p : panel.prices.row(i)) {
      if (!std::isfinite(p) || p <= 0.0) {
        throw ValidationError("non-positive or non-finite price for " + panel.tickers[i]);
      }
    }
  }
}

ReturnsPanel compute_returns(const PricePanel& panel) {
  validate_panel(panel);
  ReturnsPanel out;
  out.tickers = panel.tickers;
  if (panel.dates.size() > 1) out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  const std::size_t steps = panel.prices.cols() > 0 ? panel.prices.cols() - 1 : 0;
  out.returns = Matrix(panel.prices.rows(), steps);
  for (std::size_t i = 0; i < panel.prices.rows(); ++i) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double prev = panel.prices(i, t);
      out.returns(i, t) = (panel.prices(i, t + 1) - prev) / prev;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// News

TickerPattern::TickerPattern(std::string pattern) : source_(std::move(pattern)) {
  try {
    regex_ = std::regex(source_, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw ConfigError("invalid ticker pattern '" + source_ + "': " + e.what());
  }
  if (regex_.mark_count() != 1) {
    throw ConfigError("ticker pattern '" + source_ + "' must have exactly one capture group, has " +
                      std::to_string(regex_.mark_count()));
  }
}

std::vector<std::size_t> extract_tickers(std::string_view text, const TickerPattern& pattern,
                                         const Universe& universe) {
  std::vector<std::size_t> out;
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(text.begin(), text.end(), pattern.regex()), end; it != end; ++it) {
    const auto idx = universe.index_of((*it)[1].str());
    if (idx && std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
  }
  return out;
}

namespace {

void add_article(NewsLoad& load, std::string id, std::optional<Date> date, std::string text,
                 const TickerPattern& pattern, const Universe& universe) {
  NewsArticle a;
  a.mentions = extract_tickers(text, pattern, universe);
  a.article_id = std::move(id);
  a.date = date;
  a.text = std::move(text);
  load.articles.push_back(std::move(a));
}

void skip(NewsLoad& load, std::string message) {
  ++load.skipped;
  load.warnings.push_back(std::move(message));
}

}  // namespace

NewsLoad load_news(const fs::path& path, const TickerPattern& pattern, const Universe& universe) {
  NewsLoad load;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::string text = textio::read_file(f);
      if (!textio::is_valid_utf8(text)) {
        skip(load, f.string() + ": not valid UTF-8, skipped");
        continue;
      }
      add_article(load, f.stem().string(), std::nullopt, std::move(text), pattern, universe);
    }
  } else {
    const auto lines = textio::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(i + 1);
      if (!textio::is_valid_utf8(lines[i])) {
        skip(load, where + ": not valid UTF-8, skipped");
        continue;
      }
      nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text") ||
          !j["text"].is_string()) {
        skip(load, where + ": undecodable record, skipped");
        continue;
      }
      std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      std::optional<Date> date;
      if (j.contains("date") && j["date"].is_string()) {
        try {
          date = parse_date(j["date"].get<std::string>());
        } catch (const ParseError&) {
          skip(load, where + ": invalid date, skipped");
          continue;
        }
      }
      add_article(load, std::move(id), date, j["text"].get<std::string>(), pattern, universe);
    }
  }
  std::sort(load.articles.begin(), load.articles.end(),
            [](const auto& a, const auto& b) { return a.article_id < b.article_id; });
  for (std::size_t i = 1; i < load.articles.size(); ++i) {
    if (load.articles[i].article_id == load.articles[i - 1].article_id) {
      throw ValidationError(path.string() + ": duplicate article id '" + load.articles[i].article_id + "'");
    }
  }
  return load;
}

std::string articles_to_jsonl(const std::vector<NewsArticle>& articles, const Universe& universe) {
  std::string out;
  for (const auto& a : articles) {
    nlohmann::ordered_json j;
    j["id"] = a.article_id;
    if (a.date) j["date"] = format_date(*a.date);
    j["text"] = a.text;
    auto mentions = nlohmann::ordered_json::array();
    for (std::size_t m : a.mentions) mentions.push_back(universe[m].ticker);
    j["mentions"] = std::move(mentions);
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<NewsArticle> articles_from_jsonl(std::string_view content, const Universe& universe) {
  std::vector<NewsArticle> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      NewsArticle a;
      a.article_id = j.at("id").get<std::string>();
      if (j.contains("date")) a.date = parse_date(j["date"].get<std::string>());
      a.text = j.value("text", "");
      for (const auto& t : j.at("mentions")) {
        const auto idx = universe.index_of(t.get<std::string>());
        if (!idx) throw ValidationError("unknown ticker " + t.get<std::string>());
        a.mentions.push_back(*idx);
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("articles line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Universe filtering

FilteredCorpus build_universe(const PricePanel& panel, const std::vector<NewsArticle>& articles,
                              const Universe& labels, long long min_mentions) {
  if (min_mentions < 0) throw ConfigError("min_mentions must be >= 0");
  validate_panel(panel);
  FilteredCorpus out;

  std::vector<long long> counts(labels.size(), 0);
  for (const auto& a : articles) {
    for (std::size_t m : a.mentions) {
      if (m >= labels.size()) throw ValidationError("article " + a.article_id + ": mention index out of range");
      ++counts[m];
    }
  }

  std::unordered_map<std::string, std::size_t> price_row;
  for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
    price_row.emplace(panel.tickers[i], i);
    if (!labels.index_of(panel.tickers[i])) {
      out.warnings.push_back("excluding " + panel.tickers[i] + ": no label");
    }
  }

  std::vector<LabeledCompany> kept;
  std::vector<std::size_t> old_index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& c = labels[i];
    if (!price_row.contains(c.ticker)) {
      out.warnings.push_back("excluding " + c.ticker + ": incomplete or missing pricing");
      continue;
    }
    if (counts[i] < min_mentions) {
      out.warnings.push_back("excluding " + c.ticker + ": mentioned in " + std::to_string(counts[i]) +
                             " articles (< " + std::to_string(min_mentions) + ")");
      continue;
    }
    kept.push_back(c);
    old_index.push_back(i);
  }
  if (kept.empty()) throw ConfigError("universe is empty after filtering");

  const std::vector<std::string> declared = labels.sectors();
  out.universe = Universe(std::move(kept), declared);

  std::vector<std::optional<std::size_t>> remap(labels.size());
  for (std::size_t k = 0; k < old_index.size(); ++k) remap[old_index[k]] = k;

  out.prices.dates = panel.dates;
  out.prices.tickers = out.universe.tickers();
  out.prices.prices = Matrix(out.universe.size(), panel.prices.cols());
  for (std::size_t k = 0; k < out.universe.size(); ++k) {
    const auto src = panel.prices.row(price_row.at(out.universe[k].ticker));
    std::copy(src.begin(), src.end(), out.prices.prices.row(k).begin());
  }

  for (const auto& a : articles) {
    NewsArticle b = a;
    b.mentions.clear();
    for (std::size_t m : a.mentions) {
      if (remap[m]) b.mentions.push_back(*remap[m]);
    }
    if (!b.mentions.empty()) out.articles.push_back(std::move(b));
  }
  return out;
}

}  // namespace sector_embed
