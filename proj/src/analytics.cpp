#include "sector_embed/analytics.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sector_embed {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ValidationError("cosine: vectors have different lengths");
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine: zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& e) {
  const std::size_t n = e.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = std::sqrt(dot(e.row(i), e.row(i)));
    if (norms[i] == 0.0) throw ValidationError("zero embedding row for " + e.tickers[i]);
  }
  SimilarityMatrix s;
  s.tickers = e.tickers;
  s.values = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::clamp(dot(e.row(i), e.row(j)) / (norms[i] * norms[j]), -1.0, 1.0);
      s.values(i, j) = c;
      s.values(j, i) = c;
    }
  }
  return s;
}

Metric parse_metric(std::string_view text) {
  if (text == "cosine") return Metric::cosine;
  if (text == "euclidean") return Metric::euclidean;
  if (text == "dot") return Metric::dot;
  throw ConfigError("unknown metric '" + std::string(text) + "' (cosine|euclidean|dot)");
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::cosine: return "cosine";
    case Metric::euclidean: return "euclidean";
    case Metric::dot: return "dot";
  }
  return "cosine";
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<Neighbor> knn(const EmbeddingMatrix& e, std::string_view query, std::size_t k, Metric metric) {
  const auto it = std::find(e.tickers.begin(), e.tickers.end(), query);
  if (it == e.tickers.end()) {
    std::string msg = "unknown ticker '" + std::string(query) + "'";
    if (!e.tickers.empty()) {
      const auto best = std::min_element(e.tickers.begin(), e.tickers.end(), [&](const auto& a, const auto& b) {
        return edit_distance(query, a) < edit_distance(query, b);
      });
      if (edit_distance(query, *best) <= 2) msg += "; did you mean '" + *best + "'?";
    }
    throw ValidationError(msg);
  }
  if (k == 0 || k >= e.size()) {
    throw ConfigError("k must be in [1, " + std::to_string(e.size() - 1) + "], got " + std::to_string(k));
  }
  const auto q = static_cast<std::size_t>(it - e.tickers.begin());
  std::vector<Neighbor> all;
  all.reserve(e.size() - 1);
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (j == q) continue;
    double score = 0.0;
    switch (metric) {
      case Metric::cosine: score = cosine(e.row(q), e.row(j)); break;
      case Metric::dot: score = dot(e.row(q), e.row(j)); break;
      case Metric::euclidean: {
        double d2 = 0.0;
        for (std::size_t c = 0; c < e.dim(); ++c) {
          const double d = e.weights(q, c) - e.weights(j, c);
          d2 += d * d;
        }
        score = std::sqrt(d2);
        break;
      }
    }
    all.push_back({e.tickers[j], score});
  }
  const bool ascending = metric == Metric::euclidean;
  auto better = [ascending](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
    return a.ticker < b.ticker;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

std::string knn_to_text(std::string_view query, const std::vector<Neighbor>& neighbors, const Universe* labels,
                        Metric metric) {
  struct Row {
    std::string rank, ticker, name, sector1, sector2, score;
  };
  std::vector<Row> rows;
  rows.push_back({"rank", "ticker", "name", "sector1", "sector2", std::string(to_string(metric))});
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    Row r{std::to_string(i + 1), neighbors[i].ticker, "", "", "", textio::format_fixed(neighbors[i].score, 4)};
    if (labels) {
      if (auto idx = labels->index_of(neighbors[i].ticker)) {
        const auto& c = (*labels)[*idx];
        r.name = c.name;
        r.sector1 = c.sector1;
        r.sector2 = c.sector2;
      }
    }
    rows.push_back(std::move(r));
  }
  std::size_t w[6] = {0, 0, 0, 0, 0, 0};
  for (const auto& r : rows) {
    const std::string* cols[6] = {&r.rank, &r.ticker, &r.name, &r.sector1, &r.sector2, &r.score};
    for (int c = 0; c < 6; ++c) w[c] = std::max(w[c], cols[c]->size());
  }
  std::string out = "query: " + std::string(query) + "\n";
  for (const auto& r : rows) {
    const std::string* cols[6] = {&r.rank, &r.ticker, &r.name, &r.sector1, &r.sector2, &r.score};
    std::string line;
    for (int c = 0; c < 6; ++c) {
      if (!labels && c >= 2 && c <= 4) continue;
      if (!line.empty()) line += "  ";
      const std::string pad(w[c] - cols[c]->size(), ' ');
      line += (c == 0 || c == 5) ? pad + *cols[c] : *cols[c] + pad;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string knn_to_json(std::string_view query, const std::vector<Neighbor>& neighbors, const Universe* labels,
                        Metric metric) {
  nlohmann::ordered_json j;
  j["query"] = std::string(query);
  j["metric"] = to_string(metric);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& n : neighbors) {
    nlohmann::ordered_json row;
    row["ticker"] = n.ticker;
    row["score"] = n.score;
    if (labels) {
      if (auto idx = labels->index_of(n.ticker)) {
        row["name"] = (*labels)[*idx].name;
        row["sector1"] = (*labels)[*idx].sector1;
        row["sector2"] = (*labels)[*idx].sector2;
      }
    }
    arr.push_back(std::move(row));
  }
  j["neighbors"] = std::move(arr);
  return j.dump(2) + '\n';
}

SectorLevel parse_sector_level(std::string_view text) {
  if (text == "sector1") return SectorLevel::sector1;
  if (text == "sector2") return SectorLevel::sector2;
  throw ConfigError("unknown sector level '" + std::string(text) + "' (sector1|sector2)");
}

std::vector<Mismatch> mismatches(const SimilarityMatrix& s, const Universe& labels, double min_sim,
                                 SectorLevel level) {
  const std::size_t n = s.tickers.size();
  std::vector<const LabeledCompany*> company(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = labels.index_of(s.tickers[i]);
    if (!idx) throw ValidationError("no label for " + s.tickers[i]);
    company[i] = &labels[*idx];
  }
  auto sector = [level](const LabeledCompany* c) -> const std::string& {
    return level == SectorLevel::sector1 ? c->sector1 : c->sector2;
  };
  std::vector<Mismatch> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = s.values(i, j);
      if (sim < min_sim || sector(company[i]) == sector(company[j])) continue;
      std::size_t a = i, b = j;
      if (s.tickers[b] < s.tickers[a]) std::swap(a, b);
      out.push_back({s.tickers[a], s.tickers[b], sim, sector(company[a]), sector(company[b])});
    }
  }
  std::sort(out.begin(), out.end(), [](const Mismatch& x, const Mismatch& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (x.ticker_a != y.ticker_a) return x.ticker_a < y.ticker_a;
    return x.ticker_b < y.ticker_b;
  });
  return out;
}

std::string mismatches_to_csv(const std::vector<Mismatch>& rows) {
  std::string out = "ticker_a,ticker_b,similarity,sector_a,sector_b\n";
  for (const auto& m : rows) {
    out += m.ticker_a + ',' + m.ticker_b + ',' + textio::format_double(m.similarity) + ',' +
           textio::csv_field(m.sector_a) + ',' + textio::csv_field(m.sector_b) + '\n';
  }
  return out;
}

double EdgeList::density() const {
  if (node_count < 2) return 0.0;
  const double pairs = static_cast<double>(node_count) * static_cast<double>(node_count - 1) / 2.0;
  return static_cast<double>(edges.size()) / pairs;
}

EdgeList export_graph(const SimilarityMatrix& s, double threshold) {
  EdgeList g;
  g.threshold = threshold;
  g.node_count = s.tickers.size();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    for (std::size_t j = i + 1; j < g.node_count; ++j) {
      const double sim = s.values(i, j);
      if (!(sim > threshold)) continue;
      const bool ordered = s.tickers[i] < s.tickers[j];
      g.edges.push_back({ordered ? s.tickers[i] : s.tickers[j], ordered ? s.tickers[j] : s.tickers[i], sim});
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  });
  return g;
}

double density_threshold(const SimilarityMatrix& s, double target_density) {
  if (!(target_density > 0.0 && target_density <= 1.0)) {
    throw ConfigError("target density must be in (0, 1]");
  }
  const std::size_t n = s.tickers.size();
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sims.push_back(s.values(i, j));
  }
  // Edge count at threshold t is #{s > t}; it is at most m exactly when
  // t >= the (m+1)-th largest similarity.
  const auto allowed = static_cast<std::size_t>(std::floor(target_density * static_cast<double>(sims.size()) + 1e-9));
  if (allowed >= sims.size()) return -1.0;
  std::nth_element(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(allowed), sims.end(),
                   std::greater<>());
  return sims[allowed];
}

std::string edges_to_csv(const EdgeList& graph) {
  std::string out = "source,target,weight\n";
  for (const auto& e : graph.edges) {
    out += e.source + ',' + e.target + ',' + textio::format_double(e.weight) + '\n';
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string edges_to_gexf(const EdgeList& graph, const SimilarityMatrix& s, const Universe* labels) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n"
      "  <graph mode=\"static\" defaultedgetype=\"undirected\">\n";
  if (labels) {
    out +=
        "    <attributes class=\"node\">\n"
        "      <attribute id=\"0\" title=\"sector1\" type=\"string\"/>\n"
        "      <attribute id=\"1\" title=\"sector2\" type=\"string\"/>\n"
        "    </attributes>\n";
  }
  out += "    <nodes>\n";
  for (const auto& t : s.tickers) {
    const LabeledCompany* c = nullptr;
    if (labels) {
      if (auto idx = labels->index_of(t)) c = &(*labels)[*idx];
    }
    out += "      <node id=\"" + xml_escape(t) + "\" label=\"" + xml_escape(c ? c->name : t) + "\"";
    if (c) {
      out += ">\n        <attvalues>\n";
      out += "          <attvalue for=\"0\" value=\"" + xml_escape(c->sector1) + "\"/>\n";
      out += "          <attvalue for=\"1\" value=\"" + xml_escape(c->sector2) + "\"/>\n";
      out += "        </attvalues>\n      </node>\n";
    } else {
      out += "/>\n";
    }
  }
  out += "    </nodes>\n    <edges>\n";
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto& e = graph.edges[i];
    out += "      <edge id=\"" + std::to_string(i) + "\" source=\"" + xml_escape(e.source) + "\" target=\"" +
           xml_escape(e.target) + "\" weight=\"" + textio::format_double(e.weight) + "\"/>\n";
  }
  out += "    </edges>\n  </graph>\n</gexf>\n";
  return out;
}

}  // namespace sector_embed
