// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include "sector_embed/analytics.hpp"
#include "sector_embed/classifier.hpp"
#include "sector_embed/context_gen.hpp"
#include "sector_embed/embedder.hpp"
#include "sector_embed/pipeline.hpp"
#include "sector_embed/textio.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

using namespace sector_embed;
namespace pl = sector_embed::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

pl::PipelineConfig make_config(const fs::path& dir, const json& user) {
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  textio::write_file(path, user.dump(2));
  return pl::load_config(path);
}

struct Clustering {
  double intra_minus_inter = 0.0;
  double knn_agreement = 0.0;
};

Clustering clustering(const EmbeddingMatrix& e, const Universe& labels) {
  const auto s = similarity_matrix(e);
  const std::size_t n = e.size();
  std::vector<std::string> sector(n);
  for (std::size_t i = 0; i < n; ++i) sector[i] = labels[*labels.index_of(e.tickers[i])].sector1;
  double intra = 0, inter = 0;
  std::size_t ni = 0, nx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sector[i] == sector[j]) {
        intra += s.values(i, j);
        ++ni;
      } else {
        inter += s.values(i, j);
        ++nx;
      }
    }
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, int> votes;
    for (const auto& nb : knn(e, e.tickers[i], 3)) ++votes[sector[*labels.index_of(nb.ticker)]];
    int best = 0;
    std::string winner;
    for (const auto& [sec, count] : votes) {
      if (count > best) {
        best = count;
        winner = sec;
      }
    }
    agree += (best >= 2 && winner == sector[i]);
  }
  return {intra / static_cast<double>(ni) - inter / static_cast<double>(nx),
          static_cast<double>(agree) / static_cast<double>(n)};
}

// --- criteria -------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t dim = 1 + rng.below(5);
    const auto w = test_support::random_matrix(rng, n, dim);
    ContextSet s;
    s.target = rng.below(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != s.target) s.context.push_back(j);
    }
    rng.shuffle(std::span<std::size_t>(s.context));
    s.context.resize(1 + rng.below(n - 1));
    const auto g = loss_and_gradient(w, s).gradient;
    const auto fd = oracle::fd_gradient(w, s, 1e-5);
    for (std::size_t k = 0; k < g.data().size(); ++k) {
      const double a = g.data()[k], b = fd.data()[k];
      const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0, "max relative error " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome context_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  int mismatched = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + rng.below(12);
    const std::size_t days = 1 + rng.below(30);
    ReturnsPanel p;
    p.tickers = test_support::letter_tickers(n);
    rng.shuffle(std::span<std::string>(p.tickers));
    p.returns = Matrix(n, days);
    // Coarse grid on half the panels so that ties are exercised.
    const bool grid = trial % 2 == 0;
    for (double& v : p.returns.data()) {
      v = grid ? 0.005 * static_cast<double>(static_cast<int>(rng.below(9)) - 4) : 0.02 * rng.normal();
    }
    const std::size_t c = 1 + rng.below(std::min<std::size_t>(n - 1, 5));
    for (bool filter : {true, false}) {
      if (returns_context_sets(p, {c, filter}) != oracle::returns_contexts(p.returns, p.tickers, c, filter)) {
        ++mismatched;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && secs < 5.0,
          std::to_string(mismatched) + " of 50 comparisons differ, " + fmt(secs, 3) + " s"};
}

Outcome iqr_retention() {
  Rng rng(118);
  ReturnsPanel p;
  p.tickers = test_support::letter_tickers(118);
  p.returns = Matrix(118, 1000);
  for (double& v : p.returns.data()) v = 0.01 * rng.normal();
  const auto sets = returns_context_sets(p, {3, true});
  const double retained = static_cast<double>(sets.size()) / (118.0 * 1000.0);
  return {std::abs(retained - 0.50) <= 0.03, "retention " + fmt(retained)};
}

Outcome news_count() {
  Rng rng(5);
  const auto tickers = test_support::letter_tickers(40);
  std::string detail;
  bool ok = true;
  for (auto [m, n] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {37, 3}, {200, 5}, {500, 2}, {64, 40}}) {
    std::vector<NewsArticle> articles(m);
    for (std::size_t a = 0; a < m; ++a) {
      articles[a].article_id = "a" + std::to_string(a);
      std::vector<std::size_t> all(tickers.size());
      std::iota(all.begin(), all.end(), 0);
      rng.shuffle(std::span<std::size_t>(all));
      articles[a].mentions.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    }
    const auto got = news_context_sets(articles, tickers).size();
    ok = ok && got == m * n;
    detail += (detail.empty() ? "" : ", ") + std::to_string(m) + "x" + std::to_string(n) + "->" + std::to_string(got);
  }
  return {ok, detail};
}

// Shared by the two sector-recovery criteria.
struct RecoveryRun {
  Clustering returns, news;
  double secs = 0.0;
};

RecoveryRun recovery_run(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = make_config(dir, json{{"universe", {{"min_mentions", 0}}},
                                         {"synth",
                                          {{"n_sectors", 4},
                                           {"companies_per_sector", 10},
                                           {"n_days", 500},
                                           {"n_articles", 400},
                                           {"mentions_per_article", 3},
                                           {"intra_sector_return_correlation", 0.9},
                                           {"co_mention_bias", 0.9},
                                           {"daily_volatility", 0.01},
                                           {"seed", 11}}}});
  pl::cmd_synth(cfg);
  pl::cmd_ingest(cfg);
  pl::cmd_contexts(cfg);
  pl::cmd_train(cfg, "both");
  const auto labels = load_labels(cfg.out("universe.csv"));
  RecoveryRun r;
  r.returns = clustering(load_embeddings(cfg.out("embeddings_returns.tsv")), labels);
  r.news = clustering(load_embeddings(cfg.out("embeddings_news.tsv")), labels);
  r.secs = seconds_since(t0);
  return r;
}

Outcome recovery_outcome(const Clustering& c, double secs) {
  return {c.intra_minus_inter >= 0.2 && c.knn_agreement >= 0.8 && secs < 120.0,
          "intra-inter cosine " + fmt(c.intra_minus_inter) + ", 3-NN agreement " + fmt(c.knn_agreement) + ", " +
              fmt(secs, 3) + " s"};
}

json classification_config() {
  return json{{"universe", {{"min_mentions", 0}}},
              {"synth",
               {{"n_sectors", 7},
                {"companies_per_sector", 15},
                {"n_days", 750},
                {"n_articles", 1000},
                {"mentions_per_article", 3},
                {"intra_sector_return_correlation", 0.9},
                {"co_mention_bias", 0.9},
                {"seed", 7}}}};
}

double cv_accuracy(const pl::PipelineConfig& cfg, const std::string& embedding) {
  return json::parse(textio::read_file(cfg.out("report_" + embedding + "_cv.json")))["accuracy"].get<double>();
}

Outcome multimodal_classification(const fs::path& dir) {
  const auto cfg = make_config(dir, classification_config());
  pl::cmd_synth(cfg);
  pl::run_all(cfg);
  const double r = cv_accuracy(cfg, "returns"), n = cv_accuracy(cfg, "news"), m = cv_accuracy(cfg, "multimodal");
  return {m >= 0.90 && m >= std::max(r, n) - 0.02,
          "multimodal " + fmt(m) + ", returns " + fmt(r) + ", news " + fmt(n)};
}

Outcome graph_export() {
  // Hand-built similarities; above 0.6: AA-BB (0.9) and CC-DD (0.95).
  SimilarityMatrix s;
  s.tickers = {"AA", "BB", "CC", "DD"};
  const double v[4][4] = {{1.0, 0.9, 0.5, 0.1}, {0.9, 1.0, 0.6, 0.2}, {0.5, 0.6, 1.0, 0.95}, {0.1, 0.2, 0.95, 1.0}};
  s.values = Matrix(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) s.values(i, j) = v[i][j];
  }
  const auto g = export_graph(s, 0.6);
  const std::vector<Edge> expected{{"AA", "BB", 0.9}, {"CC", "DD", 0.95}};
  bool ok = g.edges == expected;

  Rng rng(3);
  int violations = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + rng.below(15);
    const auto sim = similarity_matrix({test_support::letter_tickers(n), test_support::random_matrix(rng, n, 4)});
    std::set<std::pair<std::string, std::string>> previous;
    for (int k = 0; k < 20; ++k) {
      const double t = -1.0 + 2.0 * k / 19.0;
      const auto edges = export_graph(sim, t).edges;
      std::set<std::pair<std::string, std::string>> current;
      for (const auto& e : edges) current.insert({e.source, e.target});
      if (k > 0 && !std::includes(previous.begin(), previous.end(), current.begin(), current.end())) ++violations;
      if (edges.size() != oracle::edges(sim, t).size()) ++violations;
      previous = std::move(current);
    }
  }
  ok = ok && violations == 0;
  return {ok, std::to_string(g.edges.size()) + " edges at 0.6, " + std::to_string(violations) +
                  " monotonicity violations over 10 sweeps of 20 thresholds"};
}

Outcome metrics_oracle() {
  double worst = 0.0;
  {
    const std::vector<std::size_t> y_true{0, 0, 1, 1}, y_pred{0, 1, 1, 1};
    const std::vector<std::string> names{"A", "B"};
    const auto r = report_metrics(y_true, y_pred, names);
    worst = std::max({worst, std::abs(r.accuracy - 0.75), std::abs(r.per_class[0].f1 - 2.0 / 3.0),
                      std::abs(r.per_class[1].f1 - 0.8)});
  }
  Rng rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(7);
    const std::size_t n = 1 + rng.below(200);
    std::vector<std::size_t> y_true(n), y_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_true[i] = rng.below(k);
      y_pred[i] = rng.below(2) ? y_true[i] : rng.below(k);
    }
    std::vector<std::string> names(k);
    const auto got = report_metrics(y_true, y_pred, names);
    const auto want = oracle::metrics(y_true, y_pred, k);
    for (std::size_t c = 0; c < k; ++c) {
      worst = std::max({worst, std::abs(got.per_class[c].precision - want.precision[c]),
                        std::abs(got.per_class[c].recall - want.recall[c]),
                        std::abs(got.per_class[c].f1 - want.f1[c])});
      if (got.per_class[c].support != want.support[c]) worst = 1.0;
    }
    worst = std::max({worst, std::abs(got.accuracy - want.accuracy),
                      std::abs(got.weighted_precision - want.weighted_precision),
                      std::abs(got.weighted_recall - want.weighted_recall),
                      std::abs(got.weighted_f1 - want.weighted_f1)});
  }
  return {worst <= 1e-12, "max deviation " + fmt(worst)};
}

Outcome determinism(const fs::path& dir) {
  auto user = classification_config();
  user["synth"]["n_days"] = 300;
  user["synth"]["n_articles"] = 600;
  std::vector<pl::PipelineConfig> cfgs;
  for (const char* sub : {"a", "b"}) {
    auto cfg = make_config(dir / sub, user);
    pl::cmd_synth(cfg);
    pl::run_all(cfg);
    cfgs.push_back(std::move(cfg));
  }
  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(cfgs[0].out(""))) {
    const auto name = entry.path().filename().string();
    const bool relevant = name.starts_with("embeddings_") || name.starts_with("edges") || name.starts_with("report_") ||
                          name.starts_with("classification_summary") || name.starts_with("model_") ||
                          name.starts_with("contexts_") || name == "mismatches.csv";
    if (!relevant) continue;
    ++compared;
    if (textio::read_file(entry.path()) != textio::read_file(cfgs[1].out(name))) differing.push_back(name);
  }
  std::string detail = std::to_string(compared) + " files compared";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && compared >= 10, detail};
}

Outcome smote_validity(const fs::path& dir) {
  // Imbalanced subset of the 7-sector multimodal embeddings.
  const auto cfg = make_config(dir, classification_config());
  if (!fs::exists(cfg.out("embeddings_multimodal.tsv"))) {
    pl::cmd_synth(cfg);
    pl::cmd_ingest(cfg);
    pl::cmd_contexts(cfg);
    pl::cmd_train(cfg, "both");
  }
  const auto full = pl::dataset_from_embeddings(load_embeddings(cfg.out("embeddings_multimodal.tsv")),
                                                load_labels(cfg.out("universe.csv")));
  const std::vector<std::size_t> keep_per_class{15, 12, 9, 7, 5, 4, 3};
  std::vector<std::size_t> rows;
  std::vector<std::size_t> taken(full.class_names.size(), 0);
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto c = full.labels[i];
    if (taken[c] < keep_per_class[c % keep_per_class.size()]) {
      rows.push_back(i);
      ++taken[c];
    }
  }
  const auto data = subset(full, rows);

  double worst_residual = 0.0;
  bool structure_ok = true;
  const auto result = smote(data, 5, 99);
  const auto counts = result.data.class_counts();
  const auto majority = *std::max_element(counts.begin(), counts.end());
  for (auto c : counts) structure_ok = structure_ok && c == majority;
  for (std::size_t s = 0; s < result.origins.size(); ++s) {
    const auto& o = result.origins[s];
    const std::size_t row = data.size() + s;
    structure_ok = structure_ok && o.base < data.size() && o.neighbor < data.size() && o.u >= 0.0 && o.u <= 1.0 &&
                   data.labels[o.base] == result.data.labels[row] && data.labels[o.neighbor] == result.data.labels[row];
    for (std::size_t k = 0; k < data.features.cols(); ++k) {
      const double xb = data.features(o.base, k), xn = data.features(o.neighbor, k);
      worst_residual = std::max(worst_residual, std::abs(result.data.features(row, k) - (xb + o.u * (xn - xb))));
    }
  }

  // Folds: validation rows are original rows, disjoint from training, and
  // each fold's SMOTE output is exactly balanced.
  const auto cv = kfold_cv(data, 4, SmoteParams{}, 5, SvmParams{});
  std::vector<int> validated(data.size(), 0);
  for (const auto& fold : cv.folds) {
    std::set<std::size_t> train(fold.training_rows.begin(), fold.training_rows.end());
    std::vector<std::size_t> per_class(data.class_names.size(), 0);
    for (auto r : fold.training_rows) ++per_class[data.labels[r]];
    const auto fold_major = *std::max_element(per_class.begin(), per_class.end());
    std::size_t expected_synthetic = 0;
    for (auto c : per_class) expected_synthetic += c ? fold_major - c : 0;
    structure_ok = structure_ok && fold.synthetic_rows == expected_synthetic;
    for (auto r : fold.validation_rows) {
      structure_ok = structure_ok && r < data.size() && !train.contains(r);
      ++validated[r];
    }
  }
  for (int v : validated) structure_ok = structure_ok && v == 1;

  return {structure_ok && worst_residual < 1e-9,
          std::to_string(result.origins.size()) + " synthetic rows, max residual " + fmt(worst_residual) +
              (structure_ok ? ", balanced, folds clean" : ", STRUCTURE VIOLATION")};
}

}  // namespace

int main() {
  const fs::path scratch = fs::current_path() / "scratch" / "acceptance";
  fs::remove_all(scratch);

  std::optional<RecoveryRun> recovery;
  auto get_recovery = [&]() -> const RecoveryRun& {
    if (!recovery) recovery = recovery_run(scratch / "recovery");
    return *recovery;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_check},
      {"context oracle equivalence", context_oracle},
      {"IQR retention", iqr_retention},
      {"news set count", news_count},
      {"sector recovery (returns)", [&] { return recovery_outcome(get_recovery().returns, get_recovery().secs); }},
      {"sector recovery (news)", [&] { return recovery_outcome(get_recovery().news, get_recovery().secs); }},
      {"multimodal classification", [&] { return multimodal_classification(scratch / "classify"); }},
      {"graph export", graph_export},
      {"metrics oracle", metrics_oracle},
      {"determinism", [&] { return determinism(scratch / "determinism"); }},
      {"SMOTE validity", [&] { return smote_validity(scratch / "classify"); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
