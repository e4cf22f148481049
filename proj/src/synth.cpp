#include "sector_embed/synth.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/random.hpp"
#include "sector_embed/textio.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <numeric>

namespace sector_embed {

void SyntheticSpec::validate() const {
  if (n_sectors < 1 || companies_per_sector < 1) throw ConfigError("synthetic market needs at least one company");
  if (n_sectors * companies_per_sector > 500) throw ConfigError("synthetic universe limited to 500 companies");
  if (n_sectors * companies_per_sector < 3) throw ConfigError("synthetic universe needs at least 3 companies");
  if (n_days < 1 || n_days > 5000) throw ConfigError("synthetic n_days must be in [1, 5000]");
  if (mentions_per_article < 2) throw ConfigError("mentions_per_article must be >= 2");
  if (!(intra_sector_return_correlation >= 0.0 && intra_sector_return_correlation < 1.0)) {
    throw ConfigError("intra_sector_return_correlation must be in [0, 1)");
  }
  if (!(co_mention_bias >= 0.0 && co_mention_bias <= 1.0)) throw ConfigError("co_mention_bias must be in [0, 1]");
  if (!(daily_volatility > 0.0 && daily_volatility < 0.2)) throw ConfigError("daily_volatility must be in (0, 0.2)");
}

namespace {

constexpr std::array<const char*, 7> kSectorNames = {
    "Capital Goods", "Consumer Non-Durables", "Consumer Services", "Energy", "Finance", "Health Care",
    "Technology"};

std::string sector_name(std::size_t s) {
  if (s < kSectorNames.size()) return kSectorNames[s];
  return "Sector " + std::to_string(s + 1);
}

// Bijective scramble of [0, 26^4) so that ticker order is unrelated to sector.
std::string ticker_for(std::size_t i) {
  constexpr std::size_t space = 26 * 26 * 26 * 26;
  std::size_t code = (i * 7919 + 4321) % space;
  std::string t(4, 'A');
  for (int k = 3; k >= 0; --k) {
    t[static_cast<std::size_t>(k)] = static_cast<char>('A' + code % 26);
    code /= 26;
  }
  return t;
}

std::vector<Date> business_days(std::size_t count) {
  using namespace std::chrono;
  std::vector<Date> out;
  sys_days d = sys_days{year{2006} / January / 2};
  while (out.size() < count) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.emplace_back(d);
    d += days{1};
  }
  return out;
}

constexpr std::array<const char*, 6> kTemplates = {
    "{N} ({T}) shares rose after the company raised its full-year outlook.",
    "Analysts said {N} ({T}) could benefit from the same trends.",
    "{N} ({T}) declined to comment on the report.",
    "Investors also weighed results from {N} ({T}).",
    "{N} ({T}) is expected to report quarterly earnings next week.",
    "Shares of {N} ({T}) fell in heavy trading.",
};

std::string render(const char* tmpl, const LabeledCompany& c) {
  std::string s = tmpl;
  s.replace(s.find("{N}"), 3, c.name);
  s.replace(s.find("{T}"), 3, c.ticker + ".N");
  return s;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_sectors * spec.companies_per_sector;
  Rng rng(spec.seed);

  // company i belongs to sector i / companies_per_sector
  std::vector<LabeledCompany> companies(n);
  std::vector<std::string> sectors;
  for (std::size_t s = 0; s < spec.n_sectors; ++s) sectors.push_back(sector_name(s));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = i / spec.companies_per_sector;
    const std::size_t within = i % spec.companies_per_sector;
    auto& c = companies[i];
    c.ticker = ticker_for(i);
    c.name = c.ticker.substr(0, 1) + std::string(c.ticker.begin() + 1, c.ticker.end()) + " Corp";
    for (std::size_t k = 1; k < c.name.size() && c.name[k] != ' '; ++k) {
      c.name[k] = static_cast<char>(c.name[k] - 'A' + 'a');
    }
    c.sector1 = sectors[s];
    c.sector2 = sectors[s] + (within % 2 == 0 ? " Group A" : " Group B");
  }

  SyntheticData data;
  const auto dates = business_days(spec.n_days + 1);

  // Prices, generated in sector order and then stored in ticker order.
  const double rho = spec.intra_sector_return_correlation;
  const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
  Matrix prices(n, spec.n_days + 1);
  for (std::size_t i = 0; i < n; ++i) prices(i, 0) = 20.0 + 180.0 * rng.uniform();
  std::vector<double> factor(spec.n_sectors);
  for (std::size_t t = 1; t <= spec.n_days; ++t) {
    for (double& f : factor) f = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      const double r = spec.daily_volatility * (a * factor[i / spec.companies_per_sector] + b * rng.normal());
      prices(i, t) = prices(i, t - 1) * (1.0 + r);
    }
  }

  // Articles
  std::vector<std::size_t> pool(n);
  for (std::size_t k = 0; k < spec.n_articles; ++k) {
    std::vector<std::size_t> chosen;
    const bool in_sector = rng.uniform() < spec.co_mention_bias;
    if (in_sector) {
      const std::size_t s = rng.below(spec.n_sectors);
      pool.resize(spec.companies_per_sector);
      std::iota(pool.begin(), pool.end(), s * spec.companies_per_sector);
    } else {
      pool.resize(n);
      std::iota(pool.begin(), pool.end(), 0);
    }
    const std::size_t m = std::min(spec.mentions_per_article, pool.size());
    for (std::size_t j = 0; j < m; ++j) {
      std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
      chosen.push_back(pool[j]);
    }
    SyntheticArticle art;
    char id[32];
    std::snprintf(id, sizeof id, "art%06zu", k + 1);
    art.id = id;
    art.date = dates[rng.below(dates.size())];
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      if (j) art.text += ' ';
      art.text += render(kTemplates[rng.below(kTemplates.size())], companies[chosen[j]]);
    }
    data.articles.push_back(std::move(art));
  }

  data.labels = Universe(companies, sectors);
  data.prices.dates = dates;
  data.prices.tickers = data.labels.tickers();
  data.prices.prices = Matrix(n, spec.n_days + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = *data.labels.index_of(companies[i].ticker);
    const auto src = prices.row(i);
    std::copy(src.begin(), src.end(), data.prices.prices.row(row).begin());
  }
  return data;
}

std::string synthetic_news_to_jsonl(const std::vector<SyntheticArticle>& articles) {
  std::string out;
  for (const auto& a : articles) {
    nlohmann::ordered_json j;
    j["id"] = a.id;
    j["date"] = format_date(a.date);
    j["text"] = a.text;
    out += j.dump() + '\n';
  }
  return out;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& prices_path,
                     const std::filesystem::path& news_path, const std::filesystem::path& labels_path) {
  textio::write_file(prices_path, prices_to_csv(data.prices));
  textio::write_file(news_path, synthetic_news_to_jsonl(data.articles));
  textio::write_file(labels_path, labels_to_csv(data.labels));
}

}  // namespace sector_embed
