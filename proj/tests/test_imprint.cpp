#include "helpers.hpp"
#include "lowshot/error.hpp"
#include "lowshot/imprint.hpp"

#include <doctest.h>

#include <cmath>

using namespace lowshot;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// 2-D identity embedder and a head holding e1 for class 0.
Model plane_model() {
  EmbedderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dims = {};
  cfg.embedding_dim = 2;
  EmbeddingNet net(cfg);
  net.params().value("layer0.weight") = Matrix::Identity(2, 2);
  net.params().value("layer0.bias") = Matrix::Zero(2, 1);
  Matrix w(2, 1);
  w << 1, 0;
  return Model{net, CosineHead(w, {0}), {}};
}

}  // namespace

using testutil::code_of;

TEST_CASE("imprint_single appends the embedding") {
  const Model m = plane_model();
  const Model out = imprint_single(m, vec({0, 5}), 1);
  CHECK(out.head.class_count() == 2);
  CHECK(bitwise_equal(out.head.weights().col(0), m.head.weights().col(0)));
  CHECK(out.head.weights()(0, 1) == 0.0);
  CHECK(out.head.weights()(1, 1) == 1.0);
  CHECK(out.predict(vec({0.1, 3})) == 1);
  CHECK(m.head.class_count() == 1);
  CHECK(code_of([&] { imprint_single(out, vec({1, 1}), 1); }) == Errc::DuplicateClass);
}

TEST_CASE("imprinted example is predicted as its own class") {
  const Model base = testutil::small_model(6, 5, 8, 21);
  CounterRng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Vector x = testutil::random_matrix(6, 1, rng).col(0);
    const Vector phi = base.embed(x);
    const Vector cos = base.head.cosines(phi);
    if (cos.maxCoeff() >= 1 - 1e-9) continue;
    CHECK(imprint_single(base, x, 99).predict(x) == 99);
  }
}

TEST_CASE("average template examples") {
  const std::vector<Vector> two{vec({1, 0}), vec({0, 1})};
  const Vector t = average_template(two);
  CHECK(t(0) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(t(1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  const std::vector<Vector> opposite{vec({1, 0}), vec({-1, 0})};
  CHECK(code_of([&] { average_template(opposite); }) == Errc::DegenerateMean);
}

TEST_CASE("one-shot average equals single imprint bitwise") {
  const Model base = testutil::small_model(6, 5, 4, 2);
  CounterRng rng(17);
  for (int t = 0; t < 50; ++t) {
    const Vector x = testutil::random_matrix(6, 1, rng).col(0);
    const Model a = imprint_single(base, x, 40);
    const Model b = imprint_average(base, testutil::support_of(40, {x}));
    CHECK(bitwise_equal(a.head.weights(), b.head.weights()));
  }
}

TEST_CASE("imprinting leaves old columns and scale untouched") {
  const Model base = testutil::small_model(6, 5, 10, 4);
  CounterRng rng(5);
  for (std::size_t n : {1, 2, 5, 20}) {
    std::vector<Vector> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(testutil::random_matrix(6, 1, rng).col(0));
    const Model out = imprint_average(base, testutil::support_of(77, xs));
    CHECK(bitwise_equal(out.head.weights().leftCols(10), base.head.weights()));
    CHECK(out.head.log_scale() == base.head.log_scale());
    CHECK(out.parameter_count() == base.parameter_count() + 5);
    CHECK(out.embedder.params() == base.embedder.params());
  }
}

TEST_CASE("imprint_all is order invariant per class") {
  const Model base = testutil::small_model(4, 3, 2, 6);
  CounterRng rng(8);
  std::vector<SupportSet> sets;
  for (ClassId c = 10; c < 14; ++c) {
    sets.push_back(testutil::support_of(c, {testutil::random_matrix(4, 1, rng).col(0), testutil::random_matrix(4, 1, rng).col(0)}));
  }
  const Model fwd = imprint_all(base, sets);
  std::vector<SupportSet> rev(sets.rbegin(), sets.rend());
  const Model bwd = imprint_all(base, rev);
  for (ClassId c = 10; c < 14; ++c) {
    CHECK(bitwise_equal(fwd.head.weights().col(*fwd.head.column_of(c)), bwd.head.weights().col(*bwd.head.column_of(c))));
  }
  sets.push_back(sets.front());
  CHECK(code_of([&] { imprint_all(base, sets); }) == Errc::DuplicateClass);
}

TEST_CASE("imprint_augmented") {
  const Model base = testutil::small_model(6, 5, 3, 9);
  CounterRng rng(1);
  const SupportSet s = testutil::support_of(
      50, {testutil::random_matrix(6, 1, rng).col(0), testutil::random_matrix(6, 1, rng).col(0), testutil::random_matrix(6, 1, rng).col(0)});
  const Model avg = imprint_average(base, s);
  const Vector ref = avg.head.weights().col(3);

  AugmentParams identity;
  const Model id = imprint_augmented(base, s, identity, 5, 3);
  CHECK((id.head.weights().col(3) - ref).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(id.head.imprint_counts().back() == 18);

  AugmentParams jitter;
  jitter.kind = AugmentKind::jitter;
  jitter.jitter_sigma = 0.05;
  const Model j1 = imprint_augmented(base, s, jitter, 5, 3);
  CHECK(bitwise_equal(j1.head.weights(), imprint_augmented(base, s, jitter, 5, 3).head.weights()));
  CHECK_FALSE(bitwise_equal(j1.head.weights(), imprint_augmented(base, s, jitter, 5, 4).head.weights()));

  for (double sigma : {1e-3, 1e-5, 1e-7}) {
    jitter.jitter_sigma = sigma;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Vector col = imprint_augmented(base, s, jitter, 5, seed).head.weights().col(3);
      CHECK((col - ref).norm() <= 10 * sigma);
    }
  }
}

TEST_CASE("imprint_update weights by count") {
  const Model m0 = plane_model();
  const Model m1 = imprint_average(m0, testutil::support_of(1, {vec({0, 1}), vec({0, 2})}));
  CHECK(m1.head.imprint_counts()[1] == 2);
  const Model m2 = imprint_update(m1, testutil::support_of(1, {vec({1, 0})}));
  // (2 * [0,1] + [1,0]) / 3 normalized
  const Vector expect = l2_normalize(vec({1.0 / 3, 2.0 / 3}));
  CHECK((m2.head.weights().col(1) - expect).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(m2.head.imprint_counts()[1] == 3);
  // a trained column counts as one embedding
  const Model m3 = imprint_update(m0, testutil::support_of(0, {vec({0, 1})}));
  CHECK((m3.head.weights().col(0) - vec({std::sqrt(0.5), std::sqrt(0.5)})).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(code_of([&] { imprint_update(m0, testutil::support_of(5, {vec({0, 1})})); }) == Errc::MissingClassColumn);
}

TEST_CASE("add_random_columns") {
  const Model base = testutil::small_model(4, 3, 2, 1);
  const std::vector<ClassId> ids{5, 6, 7};
  const Model out = add_random_columns(base, ids, 9);
  CHECK(out.head.class_count() == 5);
  CHECK(bitwise_equal(out.head.weights().rightCols(3), xavier_uniform(3, 3, 9)));
  CHECK(out.head.imprint_counts().back() == 0);
  CHECK(bitwise_equal(out.head.weights().leftCols(2), base.head.weights()));
}
