#include "sector_embed/analytics.hpp"
#include "sector_embed/classifier.hpp"
#include "sector_embed/context_gen.hpp"
#include "sector_embed/corpus.hpp"
#include "sector_embed/embedder.hpp"
#include "sector_embed/error.hpp"
#include "sector_embed/pipeline.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
namespace se = sector_embed;

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

Array to_numpy(const se::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

se::Matrix from_numpy(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  se::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

std::vector<std::string> default_tickers(std::size_t n) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back("C" + std::to_string(i));
  return t;
}

se::pipeline::StageOutput run_stage(const std::string& stage, const std::string& config,
                                    const std::vector<std::pair<std::string, std::string>>& overrides,
                                    const std::string& arg) {
  namespace pl = se::pipeline;
  const auto cfg = pl::load_config(config, overrides);
  if (stage == "synth") return pl::cmd_synth(cfg);
  if (stage == "ingest") return pl::cmd_ingest(cfg);
  if (stage == "contexts") return pl::cmd_contexts(cfg);
  if (stage == "train") return pl::cmd_train(cfg, arg.empty() ? "both" : arg);
  if (stage == "knn") return pl::cmd_knn(cfg, arg);
  if (stage == "graph") return pl::cmd_graph(cfg);
  if (stage == "mismatch") return pl::cmd_mismatch(cfg);
  if (stage == "classify") {
    std::vector<pl::EmbeddingChoice> choices;
    if (!arg.empty() && arg != "all") choices.push_back(pl::parse_embedding_choice(arg));
    return pl::cmd_classify(cfg, choices);
  }
  if (stage == "run") return pl::run_all(cfg);
  throw se::ConfigError("unknown stage '" + stage + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal company embeddings from stock returns and news co-mentions";
  m.attr("__version__") = "0.1.0";

  py::register_exception<se::Error>(m, "SectorEmbedError", PyExc_ValueError);

  // corpus ------------------------------------------------------------------
  py::class_<se::LabeledCompany>(m, "LabeledCompany")
      .def(py::init<std::string, std::string, std::string, std::string>(), py::arg("ticker"), py::arg("name"),
           py::arg("sector1"), py::arg("sector2"))
      .def_readonly("ticker", &se::LabeledCompany::ticker)
      .def_readonly("name", &se::LabeledCompany::name)
      .def_readonly("sector1", &se::LabeledCompany::sector1)
      .def_readonly("sector2", &se::LabeledCompany::sector2);

  py::class_<se::Universe>(m, "Universe")
      .def(py::init<std::vector<se::LabeledCompany>, std::vector<std::string>>(), py::arg("companies"),
           py::arg("declared_sectors") = std::vector<std::string>{})
      .def("__len__", &se::Universe::size)
      .def("__getitem__", [](const se::Universe& u, std::size_t i) {
        if (i >= u.size()) throw py::index_error();
        return u[i];
      })
      .def_property_readonly("tickers", &se::Universe::tickers)
      .def_property_readonly("sectors", &se::Universe::sectors)
      .def("index_of", &se::Universe::index_of);

  m.def("load_labels", &se::load_labels, py::arg("path"));

  m.def(
      "compute_returns", [](const Array& prices) { return to_numpy(se::compute_returns({default_tickers(prices.shape(0)), {}, from_numpy(prices)}).returns); },
      py::arg("prices"), "Simple returns of a companies x (T+1) price matrix.");

  m.def(
      "extract_tickers",
      [](const std::string& text, const se::Universe& universe, const std::string& pattern) {
        return se::extract_tickers(text, se::TickerPattern(pattern), universe);
      },
      py::arg("text"), py::arg("universe"), py::arg("pattern") = std::string(se::kDefaultTickerPattern));

  // context_gen -------------------------------------------------------------
  py::enum_<se::Modality>(m, "Modality").value("returns", se::Modality::returns).value("news", se::Modality::news);

  py::class_<se::ContextSet>(m, "ContextSet")
      .def(py::init<>())
      .def(py::init([](std::size_t target, std::vector<std::size_t> context, se::Modality modality,
                       std::string origin) {
             return se::ContextSet{target, std::move(context), modality, std::move(origin)};
           }),
           py::arg("target"), py::arg("context"), py::arg("modality") = se::Modality::returns,
           py::arg("origin") = "")
      .def_readwrite("target", &se::ContextSet::target)
      .def_readwrite("context", &se::ContextSet::context)
      .def_readwrite("modality", &se::ContextSet::modality)
      .def_readwrite("origin", &se::ContextSet::origin)
      .def("__repr__", [](const se::ContextSet& s) {
        std::string r = "ContextSet(target=" + std::to_string(s.target) + ", context=[";
        for (std::size_t i = 0; i < s.context.size(); ++i) r += (i ? ", " : "") + std::to_string(s.context[i]);
        return r + "])";
      });

  m.def(
      "daily_quartiles",
      [](const std::vector<double>& column) {
        const auto q = se::daily_quartiles(column);
        return py::make_tuple(q.q1, q.q3);
      },
      py::arg("column"));

  m.def(
      "returns_context_sets",
      [](const Array& returns, std::vector<std::string> tickers, std::size_t context_size, bool iqr_filter) {
        se::ReturnsPanel panel;
        panel.returns = from_numpy(returns);
        panel.tickers = tickers.empty() ? default_tickers(panel.returns.rows()) : std::move(tickers);
        return se::returns_context_sets(panel, {context_size, iqr_filter});
      },
      py::arg("returns"), py::arg("tickers") = std::vector<std::string>{}, py::arg("context_size") = 3,
      py::arg("iqr_filter") = true);

  m.def(
      "news_context_sets",
      [](const std::vector<std::vector<std::size_t>>& mentions, const std::vector<std::string>& tickers) {
        std::vector<se::NewsArticle> articles;
        for (std::size_t i = 0; i < mentions.size(); ++i) {
          char id[32];
          std::snprintf(id, sizeof id, "a%08zu", i);
          articles.push_back({id, std::nullopt, "", mentions[i]});
        }
        return se::news_context_sets(articles, tickers);
      },
      py::arg("mentions"), py::arg("tickers"), "Context sets from per-article lists of company indices.");

  // embedder ----------------------------------------------------------------
  py::class_<se::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("dim", &se::TrainConfig::dim)
      .def_readwrite("learning_rate", &se::TrainConfig::learning_rate)
      .def_readwrite("epochs", &se::TrainConfig::epochs)
      .def_readwrite("seed", &se::TrainConfig::seed)
      .def_readwrite("init_scale", &se::TrainConfig::init_scale)
      .def_readwrite("shuffle_each_epoch", &se::TrainConfig::shuffle_each_epoch);

  py::class_<se::EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init([](std::vector<std::string> tickers, const Array& w) {
             se::EmbeddingMatrix e{std::move(tickers), from_numpy(w)};
             if (e.tickers.size() != e.weights.rows()) throw py::value_error("ticker count must match row count");
             return e;
           }),
           py::arg("tickers"), py::arg("weights"))
      .def_readonly("tickers", &se::EmbeddingMatrix::tickers)
      .def_property_readonly("weights", [](const se::EmbeddingMatrix& e) { return to_numpy(e.weights); })
      .def_property_readonly("dim", &se::EmbeddingMatrix::dim)
      .def("__len__", &se::EmbeddingMatrix::size);

  m.def("init_embeddings", &se::init_embeddings, py::arg("tickers"), py::arg("config"));
  m.def(
      "hidden_layer", [](const Array& w, const std::vector<std::size_t>& ctx) { return se::hidden_layer(from_numpy(w), ctx); },
      py::arg("weights"), py::arg("context"));
  m.def(
      "forward", [](const Array& w, const std::vector<double>& h) { return se::forward(from_numpy(w), h); },
      py::arg("weights"), py::arg("hidden"));
  m.def(
      "loss_and_gradient",
      [](const Array& w, const se::ContextSet& set) {
        auto lg = se::loss_and_gradient(from_numpy(w), set);
        return py::make_tuple(lg.loss, to_numpy(lg.gradient));
      },
      py::arg("weights"), py::arg("set"));
  m.def(
      "train",
      [](const std::vector<se::ContextSet>& sets, const std::vector<std::string>& tickers, const se::TrainConfig& cfg) {
        se::TrainResult r;
        {
          py::gil_scoped_release release;
          r = se::train(sets, tickers, cfg);
        }
        return py::make_tuple(std::move(r.embeddings), std::move(r.loss_trace));
      },
      py::arg("sets"), py::arg("tickers"), py::arg("config"), "Returns (embeddings, loss_trace).");
  m.def("concat_embeddings", &se::concat_embeddings, py::arg("a"), py::arg("b"), py::arg("normalize") = false);
  m.def("load_embeddings", &se::load_embeddings, py::arg("path"));

  // analytics ---------------------------------------------------------------
  py::enum_<se::Metric>(m, "Metric")
      .value("cosine", se::Metric::cosine)
      .value("euclidean", se::Metric::euclidean)
      .value("dot", se::Metric::dot);

  py::class_<se::Neighbor>(m, "Neighbor")
      .def_readonly("ticker", &se::Neighbor::ticker)
      .def_readonly("score", &se::Neighbor::score)
      .def("__repr__", [](const se::Neighbor& n) { return "Neighbor(" + n.ticker + ", " + std::to_string(n.score) + ")"; });

  py::class_<se::Edge>(m, "Edge")
      .def_readonly("source", &se::Edge::source)
      .def_readonly("target", &se::Edge::target)
      .def_readonly("weight", &se::Edge::weight);

  py::class_<se::EdgeList>(m, "EdgeList")
      .def_readonly("edges", &se::EdgeList::edges)
      .def_readonly("threshold", &se::EdgeList::threshold)
      .def_property_readonly("density", &se::EdgeList::density);

  py::class_<se::Mismatch>(m, "Mismatch")
      .def_readonly("ticker_a", &se::Mismatch::ticker_a)
      .def_readonly("ticker_b", &se::Mismatch::ticker_b)
      .def_readonly("similarity", &se::Mismatch::similarity)
      .def_readonly("sector_a", &se::Mismatch::sector_a)
      .def_readonly("sector_b", &se::Mismatch::sector_b);

  m.def("cosine", &se::cosine, py::arg("u"), py::arg("v"));
  m.def(
      "similarity_matrix", [](const se::EmbeddingMatrix& e) { return to_numpy(se::similarity_matrix(e).values); },
      py::arg("embeddings"));
  m.def("knn", &se::knn, py::arg("embeddings"), py::arg("query"), py::arg("k"), py::arg("metric") = se::Metric::cosine);
  m.def(
      "export_graph",
      [](const Array& s, std::vector<std::string> tickers, double threshold) {
        return se::export_graph({std::move(tickers), from_numpy(s)}, threshold);
      },
      py::arg("similarity"), py::arg("tickers"), py::arg("threshold") = 0.6);
  m.def(
      "density_threshold",
      [](const Array& s, std::vector<std::string> tickers, double density) {
        return se::density_threshold({std::move(tickers), from_numpy(s)}, density);
      },
      py::arg("similarity"), py::arg("tickers"), py::arg("target_density"));
  m.def(
      "mismatches",
      [](const se::EmbeddingMatrix& e, const se::Universe& labels, double min_sim) {
        return se::mismatches(se::similarity_matrix(e), labels, min_sim);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("min_sim") = 0.6);

  // classifier --------------------------------------------------------------
  py::class_<se::SvmParams>(m, "SvmParams")
      .def(py::init<>())
      .def_readwrite("reg_lambda", &se::SvmParams::reg_lambda)
      .def_readwrite("learning_rate", &se::SvmParams::learning_rate)
      .def_readwrite("epochs", &se::SvmParams::epochs)
      .def_readwrite("seed", &se::SvmParams::seed)
      .def_readwrite("standardize", &se::SvmParams::standardize);

  py::class_<se::LinearModel>(m, "LinearModel")
      .def_property_readonly("weights", [](const se::LinearModel& lm) { return to_numpy(lm.weights); })
      .def_readonly("biases", &se::LinearModel::biases)
      .def_readonly("class_names", &se::LinearModel::class_names)
      .def("predict", [](const se::LinearModel& lm, const std::vector<double>& x) { return se::predict(lm, x); })
      .def("predict_proba", [](const se::LinearModel& lm, const std::vector<double>& x) { return se::predict_proba(lm, x); })
      .def("to_json", &se::model_to_json);

  py::class_<se::ClassMetrics>(m, "ClassMetrics")
      .def_readonly("class_name", &se::ClassMetrics::class_name)
      .def_readonly("precision", &se::ClassMetrics::precision)
      .def_readonly("recall", &se::ClassMetrics::recall)
      .def_readonly("f1", &se::ClassMetrics::f1)
      .def_readonly("support", &se::ClassMetrics::support);

  py::class_<se::ClassificationReport>(m, "ClassificationReport")
      .def_readonly("per_class", &se::ClassificationReport::per_class)
      .def_readonly("weighted_precision", &se::ClassificationReport::weighted_precision)
      .def_readonly("weighted_recall", &se::ClassificationReport::weighted_recall)
      .def_readonly("weighted_f1", &se::ClassificationReport::weighted_f1)
      .def_readonly("accuracy", &se::ClassificationReport::accuracy)
      .def("__str__", &se::report_to_text);

  auto make_dataset = [](const Array& x, std::vector<std::size_t> y, std::vector<std::string> names) {
    se::Dataset d{from_numpy(x), std::move(y), std::move(names)};
    d.validate();
    return d;
  };

  m.def(
      "smote",
      [make_dataset](const Array& x, std::vector<std::size_t> y, std::vector<std::string> names, std::size_t k,
                     std::uint64_t seed) {
        const auto r = se::smote(make_dataset(x, std::move(y), std::move(names)), k, seed);
        return py::make_tuple(to_numpy(r.data.features), r.data.labels);
      },
      py::arg("features"), py::arg("labels"), py::arg("class_names"), py::arg("k_neighbors") = 5, py::arg("seed") = 0,
      "Returns (features, labels) with originals first.");
  m.def(
      "train_linear_svm",
      [make_dataset](const Array& x, std::vector<std::size_t> y, std::vector<std::string> names,
                     const se::SvmParams& params) {
        return se::train_linear_svm(make_dataset(x, std::move(y), std::move(names)), params).model;
      },
      py::arg("features"), py::arg("labels"), py::arg("class_names"), py::arg("params") = se::SvmParams{});
  m.def(
      "kfold_cv",
      [make_dataset](const Array& x, std::vector<std::size_t> y, std::vector<std::string> names, std::size_t k,
                     bool use_smote, std::uint64_t seed, const se::SvmParams& params) {
        return se::kfold_cv(make_dataset(x, std::move(y), std::move(names)), k, {use_smote, 5}, seed, params).report;
      },
      py::arg("features"), py::arg("labels"), py::arg("class_names"), py::arg("k") = 4, py::arg("use_smote") = true,
      py::arg("seed") = 0, py::arg("params") = se::SvmParams{});
  m.def(
      "report_metrics",
      [](const std::vector<std::size_t>& y_true, const std::vector<std::size_t>& y_pred,
         const std::vector<std::string>& names) { return se::report_metrics(y_true, y_pred, names); },
      py::arg("y_true"), py::arg("y_pred"), py::arg("class_names"));

  // pipeline ----------------------------------------------------------------
  m.def(
      "run_stage",
      [](const std::string& stage, const std::string& config,
         const std::vector<std::pair<std::string, std::string>>& overrides, const std::string& arg) {
        const auto out = run_stage(stage, config, overrides, arg);
        std::vector<std::string> files;
        for (const auto& f : out.files) files.push_back(f.string());
        return py::make_tuple(out.summary, files);
      },
      py::arg("stage"), py::arg("config"), py::arg("overrides") = std::vector<std::pair<std::string, std::string>>{},
      py::arg("arg") = "", "Runs one CLI stage; returns (summary, written_files).");
  m.def("config_keys", &se::pipeline::config_keys);
}
