// sector-embed: company embeddings from returns and news co-mentions.

#include "sector_embed/error.hpp"
#include "sector_embed/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace se = sector_embed;
namespace pl = sector_embed::pipeline;

namespace {

int fail(std::string_view category, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", category}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal company embeddings: ingest, train, analyse, classify", "sector-embed"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> key_flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Pipeline config (JSON)")->required();
    sub->add_option("--set", sets, "Override a config key: section.key=value");
    for (const auto& key : pl::config_keys()) {
      sub->add_option_function<std::string>(
          "--" + key, [&key_flags, key](const std::string& v) { key_flags[key] = v; }, "Override " + key);
    }
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic price file, news corpus and labels");
  auto* ingest = app.add_subcommand("ingest", "Load raw inputs and build the filtered universe");
  auto* contexts = app.add_subcommand("contexts", "Generate returns and news context sets");
  auto* train = app.add_subcommand("train", "Train embeddings per modality and concatenate");
  auto* knn = app.add_subcommand("knn", "Nearest companies to a query ticker");
  auto* graph = app.add_subcommand("graph", "Export the thresholded similarity graph");
  auto* mismatch = app.add_subcommand("mismatch", "List high-similarity cross-sector pairs");
  auto* classify = app.add_subcommand("classify", "Industry classification with cross validation");
  auto* run = app.add_subcommand("run", "ingest, contexts, train, graph, mismatch and classify in sequence");
  for (auto* sub : {synth, ingest, contexts, train, knn, graph, mismatch, classify, run}) add_common(sub);

  std::string modality = "both";
  train->add_option("--modality", modality, "returns | news | both")
      ->check(CLI::IsMember({"returns", "news", "both"}));

  std::string query;
  std::optional<std::size_t> k;
  knn->add_option("--query", query, "Query ticker")->required();
  knn->add_option("--k", k, "Number of neighbours (default analytics.knn_k)");

  std::string embedding = "all";
  classify->add_option("--embedding", embedding, "returns | news | multimodal | all")
      ->check(CLI::IsMember({"returns", "news", "multimodal", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), 64);
  }

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw se::ConfigError("--set expects section.key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : key_flags) overrides.emplace_back(key, value);

    const auto cfg = pl::load_config(config_path, overrides);
    pl::StageOutput out;
    if (synth->parsed()) out = pl::cmd_synth(cfg);
    else if (ingest->parsed()) out = pl::cmd_ingest(cfg);
    else if (contexts->parsed()) out = pl::cmd_contexts(cfg);
    else if (train->parsed()) out = pl::cmd_train(cfg, modality);
    else if (knn->parsed()) out = pl::cmd_knn(cfg, query, k);
    else if (graph->parsed()) out = pl::cmd_graph(cfg);
    else if (mismatch->parsed()) out = pl::cmd_mismatch(cfg);
    else if (classify->parsed()) {
      std::vector<pl::EmbeddingChoice> choices;
      if (embedding != "all") choices.push_back(pl::parse_embedding_choice(embedding));
      out = pl::cmd_classify(cfg, choices);
    } else if (run->parsed()) {
      out = pl::run_all(cfg);
    }
    std::cout << out.summary;
    return 0;
  } catch (const se::Error& e) {
    return fail(se::to_string(e.category()), e.what(), se::exit_code(e.category()));
  } catch (const nlohmann::json::exception& e) {
    return fail("parse", e.what(), se::exit_code(se::ErrorCategory::parse));
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what(), se::exit_code(se::ErrorCategory::io));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
