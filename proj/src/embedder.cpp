#include "sector_embed/embedder.hpp"

#include "sector_embed/error.hpp"
#include "sector_embed/random.hpp"
#include "sector_embed/textio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace sector_embed {

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("embedding dim must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (init_scale && (!(*init_scale >= 0.0) || !std::isfinite(*init_scale))) {
    throw ConfigError("init_scale must be non-negative and finite");
  }
}

EmbeddingMatrix init_embeddings(std::span<const std::string> tickers, const TrainConfig& cfg) {
  cfg.validate();
  EmbeddingMatrix e;
  e.tickers.assign(tickers.begin(), tickers.end());
  e.weights = Matrix(tickers.size(), cfg.dim);
  const double scale = cfg.effective_init_scale();
  Rng rng(cfg.seed);
  for (double& w : e.weights.data()) w = scale * (2.0 * rng.uniform() - 1.0);
  return e;
}

std::vector<double> hidden_layer(const Matrix& weights, std::span<const std::size_t> context) {
  if (context.empty()) throw ValidationError("hidden layer needs a nonempty context");
  std::vector<double> h(weights.cols(), 0.0);
  for (std::size_t c : context) {
    if (c >= weights.rows()) throw ValidationError("context index " + std::to_string(c) + " out of range");
    const auto row = weights.row(c);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (double& v : h) v *= inv;
  return h;
}

namespace {

// Fills `logits` with W h and returns log-sum-exp of them.
double logits_and_lse(const Matrix& weights, std::span<const double> hidden, std::vector<double>& logits) {
  logits.resize(weights.rows());
  double max_logit = -INFINITY;
  for (std::size_t j = 0; j < weights.rows(); ++j) {
    logits[j] = dot(weights.row(j), hidden);
    max_logit = std::max(max_logit, logits[j]);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  return max_logit + std::log(sum);
}

}  // namespace

std::vector<double> forward(const Matrix& weights, std::span<const double> hidden) {
  if (hidden.size() != weights.cols()) throw ValidationError("hidden vector length does not match embedding dim");
  std::vector<double> p;
  const double lse = logits_and_lse(weights, hidden, p);
  for (double& v : p) v = std::exp(v - lse);
  return p;
}

double set_loss(const Matrix& weights, const ContextSet& set) {
  const auto h = hidden_layer(weights, set.context);
  std::vector<double> logits;
  const double lse = logits_and_lse(weights, h, logits);
  return lse - logits.at(set.target);
}

LossGradient loss_and_gradient(const Matrix& weights, const ContextSet& set) {
  validate_context_set(set, weights.rows());
  const std::size_t dim = weights.cols();
  const auto h = hidden_layer(weights, set.context);
  std::vector<double> e;
  const double lse = logits_and_lse(weights, h, e);

  LossGradient out;
  out.loss = lse - e[set.target];
  for (double& v : e) v = std::exp(v - lse);
  e[set.target] -= 1.0;

  // output projection: row j gets e_j * h
  out.gradient = Matrix(weights.rows(), dim);
  std::vector<double> back(dim, 0.0);  // W^T e
  for (std::size_t j = 0; j < weights.rows(); ++j) {
    const auto wj = weights.row(j);
    auto gj = out.gradient.row(j);
    for (std::size_t k = 0; k < dim; ++k) {
      gj[k] = e[j] * h[k];
      back[k] += e[j] * wj[k];
    }
  }
  // input averaging: each context row gets W^T e / C
  const double inv = 1.0 / static_cast<double>(set.context.size());
  for (std::size_t c : set.context) {
    auto gc = out.gradient.row(c);
    for (std::size_t k = 0; k < dim; ++k) gc[k] += inv * back[k];
  }
  return out;
}

TrainResult train(const std::vector<ContextSet>& sets, std::span<const std::string> tickers,
                  const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = tickers.size();
  for (const auto& s : sets) validate_context_set(s, n);

  TrainResult result;
  result.embeddings = init_embeddings(tickers, cfg);
  Matrix& w = result.embeddings.weights;
  const std::size_t dim = cfg.dim;
  const double lr = cfg.learning_rate;

  // Separate stream from initialization so toggling shuffling leaves the
  // initial matrix unchanged.
  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> h(dim), e(n), back(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) order_rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t idx : order) {
      const ContextSet& set = sets[idx];
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t c : set.context) {
        const auto row = w.row(c);
        for (std::size_t k = 0; k < dim; ++k) h[k] += row[k];
      }
      const double inv = 1.0 / static_cast<double>(set.context.size());
      for (double& v : h) v *= inv;

      const double lse = logits_and_lse(w, h, e);
      const double loss = lse - e[set.target];
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1) + " on set " +
                           std::to_string(idx) + " (target " + tickers[set.target] + ", origin " +
                           set.origin + ")");
      }
      total += loss;
      for (double& v : e) v = std::exp(v - lse);
      e[set.target] -= 1.0;

      std::fill(back.begin(), back.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const auto wj = w.row(j);
        for (std::size_t k = 0; k < dim; ++k) back[k] += e[j] * wj[k];
      }
      for (std::size_t j = 0; j < n; ++j) {
        auto wj = w.row(j);
        const double scale = lr * e[j];
        for (std::size_t k = 0; k < dim; ++k) wj[k] -= scale * h[k];
      }
      for (std::size_t c : set.context) {
        auto wc = w.row(c);
        for (std::size_t k = 0; k < dim; ++k) wc[k] -= lr * inv * back[k];
      }
    }
    result.loss_trace.push_back(sets.empty() ? 0.0 : total / static_cast<double>(sets.size()));
  }
  return result;
}

EmbeddingMatrix concat_embeddings(const EmbeddingMatrix& a, const EmbeddingMatrix& b, bool normalize) {
  if (a.tickers != b.tickers) {
    const std::set<std::string> sa(a.tickers.begin(), a.tickers.end());
    const std::set<std::string> sb(b.tickers.begin(), b.tickers.end());
    std::vector<std::string> diff;
    std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(diff));
    std::string msg = "cannot concatenate embeddings over different universes";
    if (diff.empty()) {
      msg += ": same tickers in a different order";
    } else {
      msg += "; symmetric difference:";
      for (const auto& t : diff) msg += " " + t;
    }
    throw ValidationError(msg);
  }
  EmbeddingMatrix out;
  out.tickers = a.tickers;
  out.weights = Matrix(a.size(), a.dim() + b.dim());
  auto copy_row = [normalize](std::span<const double> src, std::span<double> dst) {
    double scale = 1.0;
    if (normalize) {
      const double norm = std::sqrt(dot(src, src));
      if (norm > 0.0) scale = 1.0 / norm;
    }
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = scale * src[k];
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto dst = out.weights.row(i);
    copy_row(a.row(i), dst.subspan(0, a.dim()));
    copy_row(b.row(i), dst.subspan(a.dim()));
  }
  return out;
}

std::string embeddings_to_tsv(const EmbeddingMatrix& e) {
  std::string out = "ticker";
  for (std::size_t k = 0; k < e.dim(); ++k) out += "\tdim" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < e.size(); ++i) {
    out += e.tickers[i];
    for (double v : e.row(i)) out += '\t' + textio::format_double(v);
    out += '\n';
  }
  return out;
}

EmbeddingMatrix embeddings_from_tsv(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError("embedding file: missing header");
  auto split_tabs = [](const std::string& s) {
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = s.find('\t', start);
      f.push_back(s.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (!f.empty() && !f.back().empty() && f.back().back() == '\r') f.back().pop_back();
    return f;
  };
  const auto header = split_tabs(line);
  if (header.empty() || header[0] != "ticker") throw ParseError("embedding file: header must start with 'ticker'");
  const std::size_t dim = header.size() - 1;
  EmbeddingMatrix e;
  std::vector<double> row(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (textio::trim(line).empty()) continue;
    const auto f = split_tabs(line);
    const std::string where = "embedding file line " + std::to_string(line_no);
    if (f.size() != dim + 1) throw ParseError(where + ": expected " + std::to_string(dim + 1) + " fields");
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = textio::parse_double(f[k + 1], where);
      if (!std::isfinite(row[k])) throw ValidationError(where + ": non-finite entry");
    }
    e.tickers.push_back(f[0]);
    if (e.weights.rows() == 0) e.weights = Matrix(0, dim);
    e.weights.append_row(row);
  }
  if (e.weights.rows() == 0) e.weights = Matrix(0, dim);
  return e;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  try {
    return embeddings_from_tsv(textio::read_file(path));
  } catch (const ParseError& err) {
    throw ParseError(path.string() + ": " + err.what());
  }
}

std::string loss_trace_to_csv(std::span<const double> trace) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i + 1) + ',' + textio::format_double(trace[i]) + '\n';
  }
  return out;
}

}  // namespace sector_embed
