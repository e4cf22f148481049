#include "sector_embed/error.hpp"
#include "sector_embed/pipeline.hpp"
#include "sector_embed/synth.hpp"
#include "sector_embed/textio.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>

using namespace sector_embed;
namespace pl = sector_embed::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config() {
  return json{
      {"universe", {{"min_mentions", 0}}},
      {"train_returns", {{"dim", 8}, {"epochs", 8}}},
      {"train_news", {{"dim", 8}, {"epochs", 8}}},
      {"analytics", {{"gexf", true}, {"knn_k", 3}}},
      {"classify", {{"k_folds", 3}, {"epochs", 80}}},
      {"synth",
       {{"n_sectors", 3},
        {"companies_per_sector", 6},
        {"n_days", 120},
        {"n_articles", 150},
        {"intra_sector_return_correlation", 0.8},
        {"co_mention_bias", 0.9}}},
  };
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const auto path = dir / "config.json";
  textio::write_file(path, cfg.dump(2));
  return path;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd =
      std::string(SECTOR_EMBED_CLI) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, textio::read_file(out), textio::read_file(err)};
}

}  // namespace

TEST_CASE("config merging and validation") {
  const auto cfg = pl::config_from_json(json::object(), "/base");
  CHECK(cfg.contexts.context_size == 3);
  CHECK(cfg.train_returns.dim == 20);
  CHECK(cfg.train_returns.learning_rate == 0.05);
  CHECK(cfg.train_returns.epochs == 25);
  CHECK(cfg.min_mentions == 50);
  CHECK(cfg.out("x.csv") == fs::path("/base/run/x.csv"));

  const auto over = pl::config_from_json(json{{"contexts", {{"context_size", 4}}}}, "/base",
                                         {{"contexts.iqr_filter", "false"}, {"train_news.learning_rate", "0.1"}});
  CHECK(over.contexts.context_size == 4);
  CHECK_FALSE(over.contexts.iqr_filter);
  CHECK(over.train_news.learning_rate == 0.1);
  CHECK_FALSE(over.hash == cfg.hash);
  CHECK(pl::config_from_json(json::object(), "/elsewhere").hash == cfg.hash);

  CHECK_THROWS_AS(pl::config_from_json(json{{"contexts", {{"window", 3}}}}, "/"), ConfigError);
  CHECK_THROWS_AS(pl::config_from_json(json{{"nonsense", json::object()}}, "/"), ConfigError);
  CHECK_THROWS_AS(pl::config_from_json(json{{"contexts", {{"context_size", "three"}}}}, "/"), ConfigError);
  CHECK_THROWS_AS(pl::config_from_json(json::object(), "/", {{"contexts.nope", "1"}}), ConfigError);
  CHECK_THROWS_AS(pl::config_from_json(json{{"analytics", {{"metric", "manhattan"}}}}, "/"), Error);

  const auto keys = pl::config_keys();
  CHECK(std::find(keys.begin(), keys.end(), "contexts.context_size") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "classify.smote_k") != keys.end());
}

TEST_CASE("synthetic generator shape") {
  SyntheticSpec spec;
  spec.n_sectors = 3;
  spec.companies_per_sector = 4;
  spec.n_days = 30;
  spec.n_articles = 20;
  const auto data = generate_synthetic(spec);
  CHECK(data.labels.size() == 12);
  CHECK(data.labels.sectors().size() == 3);
  CHECK(data.prices.prices.rows() == 12);
  CHECK(data.prices.prices.cols() == 31);  // n_days returns need n_days + 1 closes
  CHECK(data.articles.size() == 20);
  CHECK_NOTHROW(validate_panel(data.prices));
  const auto again = generate_synthetic(spec);
  CHECK(again.prices.prices == data.prices.prices);

  spec.intra_sector_return_correlation = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}

TEST_CASE("end-to-end run writes artifacts and a manifest") {
  const auto dir = test_support::scratch_dir("pipeline_e2e");
  const auto cfg = pl::load_config(write_config(dir, small_config()));
  pl::cmd_synth(cfg);
  const auto out = pl::run_all(cfg);
  CHECK_FALSE(out.summary.empty());
  for (const char* name : {"universe.csv", "contexts_returns.jsonl", "contexts_news.jsonl", "embeddings_returns.tsv",
                           "embeddings_news.tsv", "embeddings_multimodal.tsv", "loss_returns.csv", "edges.csv",
                           "graph.gexf", "mismatches.csv", "report_multimodal_cv.txt", "model_multimodal.json",
                           "classification_summary.txt"}) {
    CHECK_MESSAGE(fs::exists(cfg.out(name)), name);
  }
  const auto manifest = json::parse(textio::read_file(cfg.out("manifest.json")));
  CHECK(manifest["config_hash"] == cfg.hash);
  for (const char* stage : {"ingest", "contexts", "train", "graph", "mismatch", "classify"}) {
    CHECK_MESSAGE(manifest["stages"].contains(stage), stage);
  }

  const auto emb = load_embeddings(cfg.out("embeddings_multimodal.tsv"));
  CHECK(emb.size() == 18);
  CHECK(emb.dim() == 16);

  const auto knn = pl::cmd_knn(cfg, emb.tickers[0]);
  CHECK(fs::exists(cfg.out("knn_" + emb.tickers[0] + ".txt")));
  CHECK_THROWS_AS(pl::cmd_knn(cfg, "QQQQQ"), ValidationError);

  const auto report = json::parse(textio::read_file(cfg.out("report_multimodal_cv.json")));
  CHECK(report["accuracy"].get<double>() >= 0.8);
}

TEST_CASE("stages fail cleanly when inputs are missing") {
  const auto dir = test_support::scratch_dir("pipeline_missing");
  const auto cfg = pl::load_config(write_config(dir, small_config()));
  CHECK_THROWS_AS(pl::cmd_ingest(cfg), IoError);
  CHECK_THROWS_AS(pl::cmd_train(cfg, "both"), IoError);
  CHECK_THROWS_AS(pl::load_config(dir / "absent.json"), IoError);
}

TEST_CASE("null control: unrelated data does not classify above chance by much") {
  const auto dir = test_support::scratch_dir("pipeline_null");
  auto j = small_config();
  j["synth"]["intra_sector_return_correlation"] = 0.0;
  j["synth"]["co_mention_bias"] = 0.0;
  j["synth"]["companies_per_sector"] = 10;
  const auto cfg = pl::load_config(write_config(dir, j));
  pl::cmd_synth(cfg);
  pl::run_all(cfg);
  const auto report = json::parse(textio::read_file(cfg.out("report_multimodal_cv.json")));
  CHECK(report["accuracy"].get<double>() <= 0.6);
}

TEST_CASE("command line interface") {
  const auto dir = test_support::scratch_dir("pipeline_cli");
  const auto config = write_config(dir, small_config());
  const std::string c = "--config '" + config.string() + "'";

  auto r = cli(dir, "synth " + c);
  CHECK(r.code == 0);
  r = cli(dir, "run " + c);
  CHECK(r.code == 0);
  CHECK(r.out.find("Multimodal Embedding") != std::string::npos);
  const auto first = textio::read_file(dir / "run" / "embeddings_multimodal.tsv");
  const auto first_edges = textio::read_file(dir / "run" / "edges.csv");

  r = cli(dir, "run " + c);
  CHECK(r.code == 0);
  CHECK(textio::read_file(dir / "run" / "embeddings_multimodal.tsv") == first);
  CHECK(textio::read_file(dir / "run" / "edges.csv") == first_edges);

  r = cli(dir, "train " + c + " --modality news --set train_news.seed=9");
  CHECK(r.code == 0);
  r = cli(dir, "graph " + c + " --analytics.graph_threshold 0.95");
  CHECK(r.code == 0);

  r = cli(dir, "knn " + c + " --query NOPE");
  CHECK(r.code == 5);
  CHECK(json::parse(r.err)["error"] == "validation");

  r = cli(dir, "contexts " + c + " --set contexts.context_size=500");
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "config");

  r = cli(dir, "contexts " + c + " --set contexts.bogus=1");
  CHECK(r.code == 2);

  r = cli(dir, "ingest --config '" + (dir / "missing.json").string() + "'");
  CHECK(r.code == 3);

  textio::write_file(dir / "broken.json", "{ not json");
  r = cli(dir, "ingest --config '" + (dir / "broken.json").string() + "'");
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "config");

  // Malformed input data is a parse error.
  textio::write_file(dir / "data" / "prices.csv", "date,ticker,close\n2020-01-02,AAA\n");
  r = cli(dir, "ingest " + c);
  CHECK(r.code == 4);

  r = cli(dir, "frobnicate");
  CHECK(r.code == 64);
}
