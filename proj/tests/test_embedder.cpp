#include "sector_embed/embedder.hpp"
#include "sector_embed/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace sector_embed;

namespace {

ContextSet random_set(Rng& rng, std::size_t n) {
  ContextSet s;
  s.target = rng.below(n);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != s.target) others.push_back(j);
  }
  rng.shuffle(std::span<std::size_t>(others));
  others.resize(1 + rng.below(n - 1));
  s.context = others;
  s.origin = "r";
  return s;
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

// Two clusters of co-mentioned companies: A-D together, E-H together.
std::vector<ContextSet> clustered_sets(Rng& rng, std::size_t count) {
  std::vector<ContextSet> sets;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = rng.below(2) * 4;
    ContextSet s;
    s.target = base + rng.below(4);
    for (std::size_t j = base; j < base + 4; ++j) {
      if (j != s.target) s.context.push_back(j);
    }
    s.modality = Modality::news;
    s.origin = std::to_string(i);
    sets.push_back(s);
  }
  return sets;
}

}  // namespace

TEST_CASE("init_embeddings is seeded and bounded") {
  const auto tickers = test_support::letter_tickers(30);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto a = init_embeddings(tickers, cfg);
  const auto b = init_embeddings(tickers, cfg);
  CHECK(a == b);
  CHECK(a.size() == 30);
  CHECK(a.dim() == 20);
  for (double v : a.weights.data()) CHECK(std::abs(v) <= 0.5 / 20);
  cfg.seed = 6;
  CHECK_FALSE(init_embeddings(tickers, cfg) == a);

  cfg.dim = 0;
  CHECK_THROWS_AS(init_embeddings(tickers, cfg), ConfigError);
  cfg.dim = 3;
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(init_embeddings(tickers, cfg), ConfigError);
}

TEST_CASE("hidden layer and forward pass") {
  Matrix w(3, 2);
  w(0, 0) = 1; w(0, 1) = 2;
  w(1, 0) = 3; w(1, 1) = 4;
  w(2, 0) = -1; w(2, 1) = 0;
  const std::vector<std::size_t> ctx{0, 1};
  const auto h = hidden_layer(w, ctx);
  CHECK(h == std::vector<double>{2, 3});
  const auto p = forward(w, h);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  // z = (8, 18, -2)
  CHECK(p[1] == doctest::Approx(1.0 / (1.0 + std::exp(-10.0) + std::exp(-20.0))));

  // Large logits do not overflow.
  Matrix big(2, 1);
  big(0, 0) = 1000;
  big(1, 0) = 999;
  const auto pb = forward(big, std::vector<double>{1.0});
  CHECK(std::isfinite(pb[0]));
  CHECK(pb[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("loss matches an independent evaluation") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(10);
    const auto w = test_support::random_matrix(rng, n, 1 + rng.below(6));
    const auto s = random_set(rng, n);
    CHECK(set_loss(w, s) == doctest::Approx(oracle::cbow_loss(w, s)).epsilon(1e-12));
    CHECK(loss_and_gradient(w, s).loss == doctest::Approx(oracle::cbow_loss(w, s)).epsilon(1e-12));
  }
  // Uniform weights give loss log |U|.
  const Matrix zero(6, 3, 0.0);
  CHECK(set_loss(zero, {0, {1, 2}, Modality::news, "z"}) == doctest::Approx(std::log(6.0)));
}

TEST_CASE("analytic gradient agrees with central differences") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t dim = 1 + rng.below(5);
    const auto w = test_support::random_matrix(rng, n, dim);
    const auto s = random_set(rng, n);
    const auto g = loss_and_gradient(w, s).gradient;
    const auto fd = oracle::fd_gradient(w, s, 1e-5);
    Matrix diff = g;
    for (std::size_t k = 0; k < diff.data().size(); ++k) diff.data()[k] -= fd.data()[k];
    CHECK(frobenius(diff) <= 1e-4 * std::max(frobenius(fd), 1e-12));
  }
}

TEST_CASE("gradient includes the output path on non-context rows") {
  Matrix w(3, 2);
  w(0, 0) = 0.3; w(0, 1) = -0.2;
  w(1, 0) = 0.1; w(1, 1) = 0.4;
  w(2, 0) = -0.5; w(2, 1) = 0.2;
  const ContextSet s{0, {1}, Modality::news, "x"};
  const auto g = loss_and_gradient(w, s).gradient;
  // Row 2 is neither target nor context: gradient is p_2 * h.
  const auto p = forward(w, hidden_layer(w, s.context));
  CHECK(g(2, 0) == doctest::Approx(p[2] * w(1, 0)).epsilon(1e-14));
  CHECK(g(2, 1) == doctest::Approx(p[2] * w(1, 1)).epsilon(1e-14));
}

TEST_CASE("one training step equals W - lr * gradient") {
  Rng rng(3);
  const auto tickers = test_support::letter_tickers(6);
  const ContextSet s{2, {0, 4, 5}, Modality::returns, "0"};
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.seed = 12;
  cfg.init_scale = 0.4;
  const auto w0 = init_embeddings(tickers, cfg).weights;
  const auto g = loss_and_gradient(w0, s);
  const auto result = train({s}, tickers, cfg);
  REQUIRE(result.loss_trace.size() == 1);
  CHECK(result.loss_trace[0] == doctest::Approx(g.loss).epsilon(1e-14));
  for (std::size_t k = 0; k < w0.data().size(); ++k) {
    CHECK(result.embeddings.weights.data()[k] ==
          doctest::Approx(w0.data()[k] - cfg.learning_rate * g.gradient.data()[k]).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic and reduces loss") {
  Rng rng(1);
  const auto sets = clustered_sets(rng, 200);
  const auto tickers = test_support::letter_tickers(8);
  TrainConfig cfg;
  cfg.dim = 5;
  cfg.seed = 99;
  cfg.epochs = 10;
  const auto a = train(sets, tickers, cfg);
  const auto b = train(sets, tickers, cfg);
  CHECK(a.embeddings == b.embeddings);
  CHECK(a.loss_trace == b.loss_trace);
  REQUIRE(a.loss_trace.size() == 10);
  for (std::size_t e = 1; e < 5; ++e) CHECK(a.loss_trace[e] <= a.loss_trace[e - 1]);
  CHECK(a.loss_trace.back() < std::log(8.0));

  cfg.seed = 100;
  CHECK_FALSE(train(sets, tickers, cfg).embeddings == a.embeddings);
}

TEST_CASE("training separates co-mentioned clusters") {
  Rng rng(2);
  const auto sets = clustered_sets(rng, 400);
  const auto tickers = test_support::letter_tickers(8);
  TrainConfig cfg;
  cfg.dim = 6;
  cfg.seed = 4;
  const auto e = train(sets, tickers, cfg).embeddings;
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      const double c = oracle::cosine(e.row(i), e.row(j));
      if (i / 4 == j / 4) { intra += c; ++ni; } else { inter += c; ++nx; }
    }
  }
  CHECK(intra / ni - inter / nx >= 0.2);
}

TEST_CASE("divergent training reports a numeric error") {
  Rng rng(1);
  const auto sets = clustered_sets(rng, 50);
  TrainConfig cfg;
  cfg.dim = 4;
  cfg.learning_rate = 1e300;
  cfg.init_scale = 1.0;
  CHECK_THROWS_AS(train(sets, test_support::letter_tickers(8), cfg), NumericError);
}

TEST_CASE("invalid context sets are rejected before training") {
  const ContextSet bad{0, {0, 1}, Modality::news, "x"};
  CHECK_THROWS_AS(train({bad}, test_support::letter_tickers(3), TrainConfig{}), ValidationError);
}

TEST_CASE("concatenation and TSV round trip") {
  Rng rng(6);
  EmbeddingMatrix a{{"AA", "BB", "CC"}, test_support::random_matrix(rng, 3, 2)};
  EmbeddingMatrix b{{"AA", "BB", "CC"}, test_support::random_matrix(rng, 3, 4)};
  const auto m = concat_embeddings(a, b);
  CHECK(m.dim() == 6);
  CHECK(m.tickers == a.tickers);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t d = 0; d < 2; ++d) CHECK(m.weights(i, d) == a.weights(i, d));
    for (std::size_t d = 0; d < 4; ++d) CHECK(m.weights(i, 2 + d) == b.weights(i, d));
  }

  const auto norm = concat_embeddings(a, b, true);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0;
    for (double v : norm.row(i)) s += v * v;
    CHECK(s == doctest::Approx(2.0));
  }

  EmbeddingMatrix c{{"AA", "BB", "DD"}, b.weights};
  try {
    concat_embeddings(a, c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("CC") != std::string::npos);
    CHECK(msg.find("DD") != std::string::npos);
  }
  EmbeddingMatrix reordered{{"BB", "AA", "CC"}, b.weights};
  CHECK_THROWS_AS(concat_embeddings(a, reordered), ValidationError);

  CHECK(embeddings_from_tsv(embeddings_to_tsv(m)) == m);
  CHECK_THROWS_AS(embeddings_from_tsv("ticker\tdim0\nAA\tnotanumber\n"), ParseError);
  CHECK(loss_trace_to_csv(std::vector<double>{0.5, 0.25}).starts_with("epoch,mean_loss\n1,"));
}
