#include "helpers.hpp"
#include "lowshot/cosine_head.hpp"
#include "lowshot/embedder.hpp"
#include "lowshot/error.hpp"
#include "lowshot/losses.hpp"

#include <doctest.h>

#include <cmath>

using namespace lowshot;

namespace {

EmbeddingNet identity_net() {
  EmbedderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dims = {};
  cfg.embedding_dim = 2;
  EmbeddingNet net(cfg);
  net.params().value("layer0.weight") = Matrix::Identity(2, 2);
  net.params().value("layer0.bias") = Matrix::Zero(2, 1);
  return net;
}

CosineHead axis_head(double scale) {
  return CosineHead(Matrix::Identity(2, 2), {7, 9}, scale);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("identity layer reduces to l2_normalize") {
  const Vector out = identity_net().embed(vec({3, 4}));
  CHECK(out(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(out(1) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("embeddings are unit length and deterministic") {
  for (Activation act : {Activation::relu, Activation::tanh}) {
    EmbedderConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dims = {12, 8};
    cfg.embedding_dim = 5;
    cfg.activation = act;
    cfg.seed = 4;
    const EmbeddingNet net(cfg);
    CounterRng rng(2);
    for (int t = 0; t < 100; ++t) {
      const Vector x = testutil::random_matrix(6, 1, rng).col(0);
      const Vector e = net.embed(x);
      CHECK(std::abs(e.norm() - 1.0) <= 1e-12);
      CHECK(bitwise_equal(e, net.embed(x)));
    }
  }
  CHECK(parse_activation(activation_name(Activation::tanh)) == Activation::tanh);
}

TEST_CASE("embed_batch matches embed and follows permutations") {
  const Model m = testutil::small_model(5, 4, 3, 8);
  CounterRng rng(6);
  std::vector<Vector> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(testutil::random_matrix(5, 1, rng).col(0));
  const auto one = m.embedder.embed_batch(std::span(xs).first(1));
  CHECK(bitwise_equal(one[0], m.embedder.embed(xs[0])));
  const auto all = m.embedder.embed_batch(xs);
  std::vector<Vector> rev(xs.rbegin(), xs.rend());
  const auto rall = m.embedder.embed_batch(rev);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(bitwise_equal(all[i], rall[xs.size() - 1 - i]));
}

TEST_CASE("embed_batch names the degenerate row") {
  const EmbeddingNet net = identity_net();
  std::vector<Vector> xs{vec({1, 0}), vec({0, 0}), vec({0, 1})};
  try {
    net.embed_batch(xs);
    FAIL("expected DegenerateNorm");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateNorm);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("embedder config validation") {
  EmbedderConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.input_dim = 3;
  cfg.embedding_dim = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.embedding_dim = 4;
  cfg.validate();
}

TEST_CASE("cosine head logits") {
  const Vector phi = vec({0.6, 0.8});
  const Vector l1 = axis_head(1.0).logits(phi);
  CHECK(l1(0) == doctest::Approx(0.6));
  CHECK(l1(1) == doctest::Approx(0.8));
  const Vector l10 = axis_head(10.0).logits(phi);
  CHECK(l10(0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(l10(1) == doctest::Approx(8.0).epsilon(1e-14));

  Matrix scaled = Matrix::Identity(2, 2);
  scaled(0, 0) = 2.0;
  const CosineHead h2(scaled, {7, 9}, 1.0);
  CHECK(bitwise_equal(h2.logits(phi), l1));
  CHECK_THROWS_AS(axis_head(1.0).logits(vec({3, 4})), Error);
}

TEST_CASE("softmax worked examples") {
  Vector logits = Vector::Constant(100, -1.0);
  logits(0) = 1.0;
  const Vector p = softmax(logits);
  const double closed = std::exp(1.0) / (std::exp(1.0) + 99 * std::exp(-1.0));
  CHECK(p(0) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(std::abs(p(0) - 0.069) <= 0.001);

  const Vector u = softmax(Vector::Constant(100, 3.0));
  CHECK((u.array() - 0.01).abs().maxCoeff() <= 1e-15);

  const Vector hi = softmax(100.0 * logits);
  CHECK(hi(0) >= 1.0 - 1e-9);
  // 99 e^-200 is far below double epsilon relative to 1
  CHECK(1.0 - hi(0) <= 99 * std::exp(-200.0) + 1e-16);
}

TEST_CASE("predict picks argmax with lowest-index ties") {
  CHECK(axis_head(1.0).predict(vec({0.6, 0.8})) == 9);
  Matrix w(2, 3);
  w << 1, 0, 1,
       0, 1, 0;
  const CosineHead h(w, {4, 5, 6}, 1.0);
  CHECK(h.predict(vec({1, 0})) == 4);
  const double scores[] = {0.2, 0.7, 0.7};
  CHECK(argmax_first(scores) == 1);
}

TEST_CASE("argmax cosine equals argmin distance") {
  CounterRng rng(12);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 2 + rng.below(6), c = 2 + rng.below(8);
    const CosineHead h(testutil::random_matrix(d, c, rng), testutil::iota_ids(c));
    const Vector phi = testutil::random_unit(d, rng);
    const Matrix unit = h.templates();
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < c; ++j) {
      const double dist = (phi - unit.col(static_cast<Eigen::Index>(j))).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    CHECK(h.predict(phi) == static_cast<ClassId>(best));
  }
}

TEST_CASE("head append, duplicate and predict_all") {
  CosineHead h = axis_head(1.0);
  CHECK_THROWS_AS(h.append(7, vec({1, 1}), 1), Error);
  h.append(11, vec({-1, 0}), 3);
  CHECK(h.class_count() == 3);
  CHECK(h.imprint_counts().back() == 3);
  CHECK(*h.column_of(11) == 2);
  std::vector<Vector> phis{vec({-1, 0}), vec({0, 1})};
  const auto preds = h.predict_all(phis);
  CHECK(preds == std::vector<ClassId>{11, 9});
  CHECK_THROWS_AS(CosineHead(Matrix::Identity(2, 2), {1, 1}), Error);
}

TEST_CASE("cross entropy worked examples") {
  Vector onehot = Vector::Zero(5);
  onehot(2) = 1.0;
  CHECK(cross_entropy(onehot, 2).loss == 0.0);
  CHECK(cross_entropy(Vector::Constant(100, 0.01), 3).loss == doctest::Approx(4.60517).epsilon(1e-6));
  Vector p = Vector::Constant(2, 0.931);
  p(0) = 0.069;
  CHECK(cross_entropy(p, 0).loss == doctest::Approx(2.674).epsilon(1e-3));
}

TEST_CASE("cross entropy from logits gradient is softmax minus onehot") {
  CounterRng rng(4);
  const Vector l = testutil::random_matrix(6, 1, rng).col(0);
  const auto r = cross_entropy_from_logits(l, 2);
  Vector expected = softmax(l);
  expected(2) -= 1.0;
  CHECK((r.grad - expected).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(r.loss == doctest::Approx(-std::log(softmax(l)(2))).epsilon(1e-13));
  CHECK(log_sum_exp(Vector::Constant(3, 1000.0)) == doctest::Approx(1000.0 + std::log(3.0)));
}

TEST_CASE("proxy loss worked examples") {
  CounterRng rng(8);
  // equidistant: proxies all orthogonal to x
  Matrix p = Matrix::Zero(11, 10);
  for (int j = 0; j < 10; ++j) p(j + 1, j) = 1.0;
  Vector x = Vector::Zero(11);
  x(0) = 1.0;
  CHECK(nca_proxy_loss(x, p, 3).loss == doctest::Approx(std::log(10.0)).epsilon(1e-14));

  Matrix q(2, 10);
  q.col(0) << 1, 0;
  for (int j = 1; j < 10; ++j) q.col(j) << -1, 0;
  // ln(1 + 9 e^-4) = 0.152584 (hand value, python math.log1p)
  CHECK(nca_proxy_loss(vec({1, 0}), q, 0).loss == doctest::Approx(0.152584).epsilon(1e-6));
  CHECK(nca_proxy_loss(vec({1, 0}), q, 0).loss ==
        doctest::Approx(std::log1p(9 * std::exp(-4.0))).epsilon(1e-14));
  CHECK_THROWS_AS(nca_proxy_loss(vec({2, 0}), q, 0), Error);
}

TEST_CASE("proxy loss gradient matches finite differences") {
  CounterRng rng(10);
  Matrix proxies(4, 5);
  for (int j = 0; j < 5; ++j) proxies.col(j) = testutil::random_unit(4, rng);
  const Vector x = testutil::random_unit(4, rng);
  const auto r = nca_proxy_loss(x, proxies, 1);
  // the loss is defined off the sphere too, so perturb without renormalizing
  auto f = [&](const Vector& v) {
    Vector s(5);
    for (int j = 0; j < 5; ++j) s(j) = -(v - proxies.col(j)).squaredNorm();
    return log_sum_exp(s) - s(1);
  };
  for (int i = 0; i < 4; ++i) {
    Vector a = x, b = x;
    a(i) += 1e-6;
    b(i) -= 1e-6;
    CHECK(r.grad(i) == doctest::Approx((f(a) - f(b)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("head backward matches finite differences") {
  CounterRng rng(5);
  CosineHead h(testutil::random_matrix(4, 3, rng), testutil::iota_ids(3), 3.0);
  Matrix emb(4, 2);
  emb.col(0) = testutil::random_unit(4, rng);
  emb.col(1) = testutil::random_unit(4, rng);
  const std::vector<std::size_t> labels{2, 0};
  const DifferentiableFn fn = [&](const ParamSet& ps, ParamSet* g) {
    CosineHead hh = h;
    hh.params() = ps;
    CosineHead::Cache cache;
    Matrix d;
    const double loss = softmax_cross_entropy(hh.forward(emb, cache), labels, g ? &d : nullptr);
    if (g) hh.backward(cache, emb, d, *g, true);
    return loss;
  };
  const auto rep = grad_check(fn, h.params(), 1e-6);
  CHECK(rep.passed);
  CHECK(rep.coordinates == 13);
}

TEST_CASE("full pipeline gradient check") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Model m = testutil::small_model(5, 4, 3, seed, {6});
    CounterRng rng(seed + 100);
    const Matrix x = testutil::random_matrix(5, 4, rng);
    const auto rep = testutil::pipeline_check(m, x, {0, 1, 2, 1}, 1e-4);
    CHECK(rep.passed);
    CHECK(rep.max_rel_error <= 1e-4);
  }
}
