#include "sector_embed/pipeline.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/textio.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace sector_embed::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kStageVersion = "1";

const std::vector<EmbeddingChoice> kAllEmbeddings = {EmbeddingChoice::returns, EmbeddingChoice::news,
                                                     EmbeddingChoice::multimodal};

}  // namespace

EmbeddingChoice parse_embedding_choice(std::string_view text) {
  if (text == "returns") return EmbeddingChoice::returns;
  if (text == "news") return EmbeddingChoice::news;
  if (text == "multimodal") return EmbeddingChoice::multimodal;
  throw ConfigError("unknown embedding '" + std::string(text) + "' (returns|news|multimodal)");
}

std::string_view to_string(EmbeddingChoice e) {
  switch (e) {
    case EmbeddingChoice::returns: return "returns";
    case EmbeddingChoice::news: return "news";
    case EmbeddingChoice::multimodal: return "multimodal";
  }
  return "multimodal";
}

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
  auto train_section = [](std::uint64_t seed) {
    return json{{"dim", 20},         {"learning_rate", 0.05}, {"epochs", 25},
                {"seed", seed},      {"init_scale", nullptr}, {"shuffle_each_epoch", true}};
  };
  return json{
      {"paths",
       {{"prices", "data/prices.csv"},
        {"price_format", "auto"},
        {"news", "data/news.jsonl"},
        {"labels", "data/labels.csv"},
        {"output_dir", "run"}}},
      {"universe", {{"min_mentions", 50}, {"ticker_pattern", std::string(kDefaultTickerPattern)}}},
      {"contexts", {{"context_size", 3}, {"iqr_filter", true}}},
      {"train_returns", train_section(1)},
      {"train_news", train_section(2)},
      {"embedding", {{"normalize_before_concat", false}}},
      {"analytics",
       {{"embedding", "multimodal"},
        {"metric", "cosine"},
        {"graph_threshold", 0.6},
        {"gexf", false},
        {"knn_k", 5},
        {"mismatch_min_sim", 0.6},
        {"mismatch_level", "sector1"}}},
      {"classify",
       {{"k_folds", 4},
        {"reg_lambda", 1e-3},
        {"learning_rate", 0.01},
        {"epochs", 200},
        {"standardize", true},
        {"smote", true},
        {"smote_k", 5},
        {"seed", 7},
        {"holdout_fraction", 0.25}}},
      {"synth",
       {{"n_sectors", 7},
        {"companies_per_sector", 15},
        {"n_days", 750},
        {"n_articles", 2000},
        {"mentions_per_article", 3},
        {"intra_sector_return_correlation", 0.6},
        {"co_mention_bias", 0.8},
        {"daily_volatility", 0.015},
        {"seed", 42}}},
  };
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const json defaults = default_config();
  for (const auto& [section, body] : defaults.items()) {
    for (const auto& [key, value] : body.items()) keys.push_back(section + "." + key);
  }
  return keys;
}

namespace {

bool same_kind(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_number()) return val.is_number();
  return def.type() == val.type();
}

void merge_into(json& target, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config" + (prefix.empty() ? "" : " section '" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!target.contains(key)) throw ConfigError("unknown config key '" + name + "'");
    json& slot = target[key];
    if (slot.is_object()) {
      merge_into(slot, value, name);
    } else {
      if (!same_kind(slot, value)) throw ConfigError("config key '" + name + "' has the wrong type");
      slot = value;
    }
  }
}

json parse_override(const json& def, const std::string& key, const std::string& text) {
  try {
    if (def.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("expected true/false");
    }
    if (def.is_null()) {
      if (text == "null" || text.empty()) return nullptr;
      return textio::parse_double(text, key);
    }
    if (def.is_number_integer()) return textio::parse_int(text, key);
    if (def.is_number()) return textio::parse_double(text, key);
    return text;
  } catch (const Error& e) {
    throw ConfigError("override " + key + "=" + text + ": " + e.what());
  }
}

template <typename T>
T get_unsigned(const json& doc, const char* section, const char* key) {
  const long long v = doc.at(section).at(key).get<long long>();
  if (v < 0) throw ConfigError(std::string("config key '") + section + "." + key + "' must be >= 0");
  return static_cast<T>(v);
}

TrainConfig train_config(const json& s) {
  TrainConfig t;
  const long long dim = s.at("dim").get<long long>();
  const long long epochs = s.at("epochs").get<long long>();
  const long long seed = s.at("seed").get<long long>();
  if (dim < 1) throw ConfigError("embedding dim must be >= 1");
  if (epochs < 0 || seed < 0) throw ConfigError("epochs and seed must be >= 0");
  t.dim = static_cast<std::size_t>(dim);
  t.learning_rate = s.at("learning_rate").get<double>();
  t.epochs = static_cast<std::size_t>(epochs);
  t.seed = static_cast<std::uint64_t>(seed);
  if (!s.at("init_scale").is_null()) t.init_scale = s.at("init_scale").get<double>();
  t.shuffle_each_epoch = s.at("shuffle_each_epoch").get<bool>();
  t.validate();
  return t;
}

}  // namespace

PipelineConfig config_from_json(const json& user, const fs::path& base_dir,
                                const std::vector<std::pair<std::string, std::string>>& overrides) {
  json doc = default_config();
  merge_into(doc, user, "");
  for (const auto& [key, text] : overrides) {
    const auto dot_pos = key.find('.');
    if (dot_pos == std::string::npos) throw ConfigError("override key '" + key + "' must be section.key");
    const std::string section = key.substr(0, dot_pos), name = key.substr(dot_pos + 1);
    if (!doc.contains(section) || !doc[section].contains(name)) throw ConfigError("unknown config key '" + key + "'");
    doc[section][name] = parse_override(default_config()[section][name], key, text);
  }

  PipelineConfig c;
  c.base_dir = base_dir;
  const auto& p = doc["paths"];
  c.prices = p["prices"].get<std::string>();
  c.price_format = parse_price_format(p["price_format"].get<std::string>());
  c.news = p["news"].get<std::string>();
  c.labels = p["labels"].get<std::string>();
  c.output_dir = p["output_dir"].get<std::string>();
  if (c.output_dir.empty()) throw ConfigError("paths.output_dir must not be empty");

  c.min_mentions = doc["universe"]["min_mentions"].get<long long>();
  if (c.min_mentions < 0) throw ConfigError("universe.min_mentions must be >= 0");
  c.ticker_pattern = doc["universe"]["ticker_pattern"].get<std::string>();
  TickerPattern{c.ticker_pattern};  // validates

  c.contexts.context_size = get_unsigned<std::size_t>(doc, "contexts", "context_size");
  if (c.contexts.context_size < 1) throw ConfigError("contexts.context_size must be >= 1");
  c.contexts.iqr_filter = doc["contexts"]["iqr_filter"].get<bool>();

  c.train_returns = train_config(doc["train_returns"]);
  c.train_news = train_config(doc["train_news"]);
  c.normalize_before_concat = doc["embedding"]["normalize_before_concat"].get<bool>();

  const auto& a = doc["analytics"];
  c.analytics_embedding = parse_embedding_choice(a["embedding"].get<std::string>());
  c.metric = parse_metric(a["metric"].get<std::string>());
  c.graph_threshold = a["graph_threshold"].get<double>();
  c.gexf = a["gexf"].get<bool>();
  c.knn_k = get_unsigned<std::size_t>(doc, "analytics", "knn_k");
  c.mismatch_min_sim = a["mismatch_min_sim"].get<double>();
  c.mismatch_level = parse_sector_level(a["mismatch_level"].get<std::string>());
  if (c.graph_threshold < -1.0 || c.graph_threshold > 1.0) throw ConfigError("analytics.graph_threshold must be in [-1, 1]");
  if (c.mismatch_min_sim < -1.0 || c.mismatch_min_sim > 1.0) throw ConfigError("analytics.mismatch_min_sim must be in [-1, 1]");
  if (c.knn_k < 1) throw ConfigError("analytics.knn_k must be >= 1");

  const auto& k = doc["classify"];
  c.k_folds = get_unsigned<std::size_t>(doc, "classify", "k_folds");
  if (c.k_folds < 2) throw ConfigError("classify.k_folds must be >= 2");
  c.svm.reg_lambda = k["reg_lambda"].get<double>();
  c.svm.learning_rate = k["learning_rate"].get<double>();
  c.svm.epochs = get_unsigned<std::size_t>(doc, "classify", "epochs");
  c.svm.standardize = k["standardize"].get<bool>();
  c.classify_seed = get_unsigned<std::uint64_t>(doc, "classify", "seed");
  c.svm.seed = c.classify_seed;
  c.svm.validate();
  c.smote.enabled = k["smote"].get<bool>();
  c.smote.k_neighbors = get_unsigned<std::size_t>(doc, "classify", "smote_k");
  if (c.smote.k_neighbors < 1) throw ConfigError("classify.smote_k must be >= 1");
  c.holdout_fraction = k["holdout_fraction"].get<double>();
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0)) throw ConfigError("classify.holdout_fraction must be in (0, 1)");

  const auto& s = doc["synth"];
  c.synth.n_sectors = get_unsigned<std::size_t>(doc, "synth", "n_sectors");
  c.synth.companies_per_sector = get_unsigned<std::size_t>(doc, "synth", "companies_per_sector");
  c.synth.n_days = get_unsigned<std::size_t>(doc, "synth", "n_days");
  c.synth.n_articles = get_unsigned<std::size_t>(doc, "synth", "n_articles");
  c.synth.mentions_per_article = get_unsigned<std::size_t>(doc, "synth", "mentions_per_article");
  c.synth.intra_sector_return_correlation = s["intra_sector_return_correlation"].get<double>();
  c.synth.co_mention_bias = s["co_mention_bias"].get<double>();
  c.synth.daily_volatility = s["daily_volatility"].get<double>();
  c.synth.seed = get_unsigned<std::uint64_t>(doc, "synth", "seed");
  c.synth.validate();

  c.document = doc;
  c.hash = textio::fnv1a_hex(doc.dump());
  return c;
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& overrides) {
  const std::string text = textio::read_file(path);
  json user = json::parse(text, nullptr, false);
  if (user.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  return config_from_json(user, path.parent_path(), overrides);
}

// ---------------------------------------------------------------------------
// Stage helpers

namespace {

void require_file(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::exists(p, ec)) throw IoError(what + " not found: " + p.string());
}

void write_output(const PipelineConfig& cfg, StageOutput& out, const std::string& name, std::string_view content) {
  const fs::path p = cfg.out(name);
  textio::write_file(p, content);
  out.files.push_back(p);
}

void record_stage(const PipelineConfig& cfg, const std::string& stage, const StageOutput& out) {
  const fs::path path = cfg.out("manifest.json");
  json manifest;
  std::error_code ec;
  if (fs::exists(path, ec)) {
    manifest = json::parse(textio::read_file(path), nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object() || manifest.value("config_hash", "") != cfg.hash) {
      manifest = json();
    }
  }
  if (manifest.is_null()) {
    manifest = json{{"config_hash", cfg.hash}, {"config", cfg.document}, {"stages", json::object()}};
  }
  std::vector<std::string> outputs;
  for (const auto& f : out.files) outputs.push_back(f.filename().string());
  std::sort(outputs.begin(), outputs.end());
  manifest["stages"][stage] = json{{"version", kStageVersion}, {"outputs", outputs}};
  textio::write_file(path, manifest.dump(2) + '\n');
}

Universe load_universe(const PipelineConfig& cfg) {
  const fs::path p = cfg.out("universe.csv");
  require_file(p, "ingested universe (run `ingest` first)");
  return load_labels(p);
}

EmbeddingMatrix load_embedding(const PipelineConfig& cfg, EmbeddingChoice choice, const Universe& universe) {
  const fs::path p = cfg.out("embeddings_" + std::string(to_string(choice)) + ".tsv");
  require_file(p, std::string(to_string(choice)) + " embeddings (run `train` first)");
  auto e = load_embeddings(p);
  if (e.tickers != universe.tickers()) {
    throw ValidationError(p.string() + ": embedding rows do not match the ingested universe");
  }
  return e;
}

std::string sector_distribution(const Universe& u) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : u.companies()) ++counts[c.sector1];
  std::string out;
  for (const auto& [sector, n] : counts) out += "  " + sector + ": " + std::to_string(n) + "\n";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

StageOutput cmd_synth(const PipelineConfig& cfg) {
  const auto data = generate_synthetic(cfg.synth);
  const fs::path prices = cfg.resolve(cfg.prices), news = cfg.resolve(cfg.news), labels = cfg.resolve(cfg.labels);
  write_synthetic(data, prices, news, labels);
  StageOutput out;
  out.files = {prices, news, labels};
  out.summary = "synthetic market: " + std::to_string(data.labels.size()) + " companies in " +
                std::to_string(cfg.synth.n_sectors) + " sectors, " + std::to_string(cfg.synth.n_days) +
                " days, " + std::to_string(data.articles.size()) + " articles\n";
  return out;
}

StageOutput cmd_ingest(const PipelineConfig& cfg) {
  const fs::path labels_path = cfg.resolve(cfg.labels), news_path = cfg.resolve(cfg.news),
                 prices_path = cfg.resolve(cfg.prices);
  require_file(labels_path, "labels file");
  require_file(news_path, "news corpus");
  require_file(prices_path, "price file");

  const Universe labels = load_labels(labels_path);
  const TickerPattern pattern(cfg.ticker_pattern);
  const NewsLoad news = load_news(news_path, pattern, labels);
  const PriceLoad prices = load_prices(prices_path, cfg.price_format);
  const FilteredCorpus corpus = build_universe(prices.panel, news.articles, labels, cfg.min_mentions);

  StageOutput out;
  write_output(cfg, out, "universe.csv", labels_to_csv(corpus.universe));
  write_output(cfg, out, "prices.csv", prices_to_csv(corpus.prices));
  write_output(cfg, out, "articles.jsonl", articles_to_jsonl(corpus.articles, corpus.universe));
  record_stage(cfg, "ingest", out);

  std::set<std::string> sectors;
  for (const auto& c : corpus.universe.companies()) sectors.insert(c.sector1);
  out.summary = "universe: " + std::to_string(corpus.universe.size()) + " companies across " +
                std::to_string(sectors.size()) + " sectors\n" + sector_distribution(corpus.universe) +
                "dates: " + std::to_string(corpus.prices.dates.size()) + "\n" +
                "articles: " + std::to_string(corpus.articles.size()) + " kept of " +
                std::to_string(news.articles.size()) + " loaded (" + std::to_string(news.skipped) + " skipped)\n";
  for (const auto& w : prices.warnings) out.summary += "warning: " + w + "\n";
  for (const auto& w : news.warnings) out.summary += "warning: " + w + "\n";
  for (const auto& w : corpus.warnings) out.summary += "warning: " + w + "\n";
  return out;
}

StageOutput cmd_contexts(const PipelineConfig& cfg) {
  const Universe universe = load_universe(cfg);
  const auto tickers = universe.tickers();
  const fs::path prices_path = cfg.out("prices.csv");
  const fs::path articles_path = cfg.out("articles.jsonl");
  require_file(prices_path, "ingested prices");
  require_file(articles_path, "ingested articles");

  const PriceLoad prices = load_prices(prices_path, PriceFormat::long_format);
  if (prices.panel.tickers != tickers) throw ValidationError("ingested prices do not match the ingested universe");
  const ReturnsPanel returns = compute_returns(prices.panel);
  const auto returns_sets = returns_context_sets(returns, cfg.contexts);
  const auto articles = articles_from_jsonl(textio::read_file(articles_path), universe);
  const auto news_sets = news_context_sets(articles, tickers);

  StageOutput out;
  write_output(cfg, out, "contexts_returns.jsonl", context_sets_to_jsonl(returns_sets, tickers));
  write_output(cfg, out, "contexts_news.jsonl", context_sets_to_jsonl(news_sets, tickers));
  record_stage(cfg, "contexts", out);

  const double possible = static_cast<double>(tickers.size()) * static_cast<double>(returns.returns.cols());
  out.summary = "returns context sets: " + std::to_string(returns_sets.size()) + " of " +
                std::to_string(static_cast<long long>(possible)) + " (retention " +
                textio::format_fixed(possible > 0 ? static_cast<double>(returns_sets.size()) / possible : 0.0, 4) +
                (cfg.contexts.iqr_filter ? ", IQR filter on" : ", IQR filter off") + ")\n" +
                "news context sets: " + std::to_string(news_sets.size()) + " from " +
                std::to_string(articles.size()) + " articles\n";
  return out;
}

StageOutput cmd_train(const PipelineConfig& cfg, std::string_view modality) {
  if (modality != "returns" && modality != "news" && modality != "both") {
    throw ConfigError("unknown modality '" + std::string(modality) + "' (returns|news|both)");
  }
  const Universe universe = load_universe(cfg);
  const auto tickers = universe.tickers();
  StageOutput out;

  auto run = [&](Modality m, const TrainConfig& tc) {
    const std::string name(to_string(m));
    const fs::path sets_path = cfg.out("contexts_" + name + ".jsonl");
    require_file(sets_path, name + " context sets (run `contexts` first)");
    const auto sets = context_sets_from_jsonl(textio::read_file(sets_path), universe);
    const auto result = train(sets, tickers, tc);
    write_output(cfg, out, "embeddings_" + name + ".tsv", embeddings_to_tsv(result.embeddings));
    write_output(cfg, out, "loss_" + name + ".csv", loss_trace_to_csv(result.loss_trace));
    out.summary += name + ": " + std::to_string(sets.size()) + " sets, " + std::to_string(tc.epochs) +
                   " epochs, dim " + std::to_string(tc.dim);
    if (!result.loss_trace.empty()) {
      out.summary += ", mean loss " + textio::format_fixed(result.loss_trace.front(), 4) + " -> " +
                     textio::format_fixed(result.loss_trace.back(), 4);
    }
    out.summary += "\n";
  };
  if (modality != "news") run(Modality::returns, cfg.train_returns);
  if (modality != "returns") run(Modality::news, cfg.train_news);

  std::error_code ec;
  if (fs::exists(cfg.out("embeddings_returns.tsv"), ec) && fs::exists(cfg.out("embeddings_news.tsv"), ec)) {
    const auto r = load_embedding(cfg, EmbeddingChoice::returns, universe);
    const auto n = load_embedding(cfg, EmbeddingChoice::news, universe);
    const auto mm = concat_embeddings(r, n, cfg.normalize_before_concat);
    write_output(cfg, out, "embeddings_multimodal.tsv", embeddings_to_tsv(mm));
    out.summary += "multimodal: dim " + std::to_string(mm.dim()) + "\n";
  }
  record_stage(cfg, "train", out);
  return out;
}

StageOutput cmd_knn(const PipelineConfig& cfg, std::string_view query, std::optional<std::size_t> k) {
  const Universe universe = load_universe(cfg);
  const auto e = load_embedding(cfg, cfg.analytics_embedding, universe);
  const auto neighbors = knn(e, query, k.value_or(cfg.knn_k), cfg.metric);
  StageOutput out;
  const std::string text = knn_to_text(query, neighbors, &universe, cfg.metric);
  write_output(cfg, out, "knn_" + std::string(query) + ".txt", text);
  write_output(cfg, out, "knn_" + std::string(query) + ".json", knn_to_json(query, neighbors, &universe, cfg.metric));
  record_stage(cfg, "knn", out);
  out.summary = text;
  return out;
}

StageOutput cmd_graph(const PipelineConfig& cfg) {
  const Universe universe = load_universe(cfg);
  const auto e = load_embedding(cfg, cfg.analytics_embedding, universe);
  const auto s = similarity_matrix(e);
  const auto g = export_graph(s, cfg.graph_threshold);
  StageOutput out;
  write_output(cfg, out, "edges.csv", edges_to_csv(g));
  if (cfg.gexf) write_output(cfg, out, "graph.gexf", edges_to_gexf(g, s, &universe));
  record_stage(cfg, "graph", out);
  out.summary = "graph: " + std::to_string(g.node_count) + " nodes, " + std::to_string(g.edges.size()) +
                " edges above " + textio::format_fixed(cfg.graph_threshold, 3) + " (density " +
                textio::format_fixed(g.density(), 4) + ")\n";
  if (g.node_count > 1) {
    out.summary += "threshold for 5% density: " + textio::format_fixed(density_threshold(s, 0.05), 4) + "\n";
  }
  return out;
}

StageOutput cmd_mismatch(const PipelineConfig& cfg) {
  const Universe universe = load_universe(cfg);
  const auto e = load_embedding(cfg, cfg.analytics_embedding, universe);
  const auto rows = mismatches(similarity_matrix(e), universe, cfg.mismatch_min_sim, cfg.mismatch_level);
  StageOutput out;
  write_output(cfg, out, "mismatches.csv", mismatches_to_csv(rows));
  record_stage(cfg, "mismatch", out);
  out.summary = std::to_string(rows.size()) + " cross-sector pairs with similarity >= " +
                textio::format_fixed(cfg.mismatch_min_sim, 3) + "\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(rows.size(), 10); ++i) {
    const auto& m = rows[i];
    out.summary += "  " + m.ticker_a + " (" + m.sector_a + ") - " + m.ticker_b + " (" + m.sector_b + ") " +
                   textio::format_fixed(m.similarity, 2) + "\n";
  }
  return out;
}

Dataset dataset_from_embeddings(const EmbeddingMatrix& e, const Universe& universe) {
  if (e.tickers != universe.tickers()) throw ValidationError("embedding rows do not match the universe");
  std::set<std::string> present;
  for (const auto& c : universe.companies()) present.insert(c.sector1);
  Dataset d;
  d.class_names.assign(present.begin(), present.end());
  d.features = e.weights;
  for (const auto& c : universe.companies()) {
    d.labels.push_back(static_cast<std::size_t>(
        std::lower_bound(d.class_names.begin(), d.class_names.end(), c.sector1) - d.class_names.begin()));
  }
  return d;
}

StageOutput cmd_classify(const PipelineConfig& cfg, const std::vector<EmbeddingChoice>& embeddings) {
  const Universe universe = load_universe(cfg);
  StageOutput out;
  const auto& choices = embeddings.empty() ? kAllEmbeddings : embeddings;

  struct Row {
    std::string model;
    ClassificationReport report;
  };
  std::vector<Row> rows;
  for (EmbeddingChoice choice : choices) {
    const std::string name(to_string(choice));
    const Dataset data = dataset_from_embeddings(load_embedding(cfg, choice, universe), universe);
    const auto cv = kfold_cv(data, cfg.k_folds, cfg.smote, cfg.classify_seed, cfg.svm);
    const auto holdout = holdout_eval(data, cfg.holdout_fraction, cfg.smote, cfg.classify_seed, cfg.svm);

    Dataset full = data;
    if (cfg.smote.enabled) full = smote(data, cfg.smote.k_neighbors, cfg.classify_seed).data;
    const auto fit = train_linear_svm(full, cfg.svm);

    write_output(cfg, out, "report_" + name + "_cv.json", report_to_json(cv.report));
    write_output(cfg, out, "report_" + name + "_cv.txt", report_to_text(cv.report));
    write_output(cfg, out, "report_" + name + "_holdout.json", report_to_json(holdout.report));
    write_output(cfg, out, "report_" + name + "_holdout.txt", report_to_text(holdout.report));
    write_output(cfg, out, "model_" + name + ".json", model_to_json(fit.model));
    std::string label = name;
    label[0] = static_cast<char>(label[0] - 'a' + 'A');
    rows.push_back({label + " Embedding", cv.report});
  }

  // Comparison across embedding choices, one row per model.
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model.size());
  auto pad = [](std::string s, std::size_t w, bool left) {
    if (s.size() >= w) return s;
    return left ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  std::string table = pad("Model", width, false) + pad("Precision", 11, true) + pad("Recall", 9, true) +
                      pad("F1", 7, true) + pad("Accuracy", 10, true) + "\n";
  json summary = json::array();
  for (const auto& r : rows) {
    table += pad(r.model, width, false) + pad(textio::format_fixed(r.report.weighted_precision, 2), 11, true) +
             pad(textio::format_fixed(r.report.weighted_recall, 2), 9, true) +
             pad(textio::format_fixed(r.report.weighted_f1, 2), 7, true) +
             pad(textio::format_fixed(100.0 * r.report.accuracy, 0) + "%", 10, true) + "\n";
    summary.push_back({{"model", r.model},
                       {"precision", r.report.weighted_precision},
                       {"recall", r.report.weighted_recall},
                       {"f1", r.report.weighted_f1},
                       {"accuracy", r.report.accuracy}});
  }
  write_output(cfg, out, "classification_summary.txt", table);
  write_output(cfg, out, "classification_summary.json", summary.dump(2) + "\n");
  record_stage(cfg, "classify", out);
  out.summary = std::to_string(cfg.k_folds) + "-fold cross validation (" + std::to_string(universe.size()) +
                " companies)\n" + table;
  return out;
}

StageOutput run_all(const PipelineConfig& cfg) {
  StageOutput all;
  auto append = [&](StageOutput s) {
    all.summary += s.summary;
    all.files.insert(all.files.end(), s.files.begin(), s.files.end());
  };
  append(cmd_ingest(cfg));
  append(cmd_contexts(cfg));
  append(cmd_train(cfg, "both"));
  append(cmd_graph(cfg));
  append(cmd_mismatch(cfg));
  append(cmd_classify(cfg, kAllEmbeddings));
  return all;
}

}  // namespace sector_embed::pipeline
