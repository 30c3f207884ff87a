#include "helpers.hpp"
#include "lowshot/checkpoint.hpp"
#include "lowshot/error.hpp"
#include "lowshot/imprint.hpp"
#include "lowshot/trainer.hpp"

#include <doctest.h>

using namespace lowshot;
using testutil::code_of;

namespace {

// tanh keeps every embedding away from zero, unlike relu with zero biases
Model sample_model() {
  EmbedderConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dims = {7, 5};
  cfg.embedding_dim = 4;
  cfg.activation = Activation::tanh;
  cfg.seed = 3;
  Model m{EmbeddingNet(cfg), CosineHead::random(4, testutil::iota_ids(5), 4), {}};
  m.provenance["stage"] = "train-base";
  m.provenance["config"] = "seed=3\nshots=1,2";
  return m;
}

}  // namespace

TEST_CASE("round trip preserves predictions bitwise") {
  testutil::TempDir tmp("ckpt");
  const Model m = sample_model();
  save_checkpoint(tmp.path / "a.ckpt", m);
  const Checkpoint c = load_checkpoint(tmp.path / "a.ckpt");
  CHECK_FALSE(c.optim.has_value());
  CHECK(c.model.embedder.params() == m.embedder.params());
  CHECK(c.model.head.params() == m.head.params());
  CHECK(c.model.head.class_ids() == m.head.class_ids());
  CHECK(c.model.embedder.config() == m.embedder.config());
  CHECK(c.model.provenance == m.provenance);
  CounterRng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vector x = testutil::random_matrix(6, 1, rng).col(0);
    CHECK(c.model.predict(x) == m.predict(x));
    CHECK(bitwise_equal(c.model.logits(x), m.logits(x)));
  }
  CHECK(encode_checkpoint(c.model, std::nullopt) == encode_checkpoint(m, std::nullopt));
}

TEST_CASE("optimizer state round trip") {
  SyntheticSpec spec;
  spec.num_classes = 3;
  spec.per_class_train = 4;
  spec.input_dim = 5;
  const DatasetPair d = gen_synthetic(spec);
  TrainConfig cfg;
  cfg.epochs = 2;
  const TrainResult r = train_base(testutil::small_model(5, 4, 3, 1), d.train, cfg);
  const auto bytes = encode_checkpoint(r.model, r.state);
  const Checkpoint c = decode_checkpoint(bytes);
  REQUIRE(c.optim.has_value());
  CHECK(*c.optim == r.state);
  CHECK(c.model.head.params() == r.model.head.params());
}

TEST_CASE("imprinted checkpoint has one more class") {
  testutil::TempDir tmp("ckpt");
  const Model m = sample_model();
  save_checkpoint(tmp.path / "a.ckpt", m);
  Vector x = Vector::Ones(6);
  save_checkpoint(tmp.path / "b.ckpt", imprint_single(load_checkpoint(tmp.path / "a.ckpt").model, x, 50));
  const Checkpoint c = load_checkpoint(tmp.path / "b.ckpt");
  CHECK(c.model.head.class_count() == m.head.class_count() + 1);
  CHECK(c.model.head.imprint_counts().back() == 1);
}

TEST_CASE("200-class head weight bitwise") {
  EmbedderConfig cfg;
  cfg.input_dim = 8;
  cfg.embedding_dim = 64;
  const Model m{EmbeddingNet(cfg), CosineHead::random(64, testutil::iota_ids(200), 4), {}};
  const Checkpoint c = decode_checkpoint(encode_checkpoint(m, std::nullopt));
  CHECK(bitwise_equal(c.model.head.weights(), m.head.weights()));
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto bytes = encode_checkpoint(sample_model(), std::nullopt);
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len));
    const Errc code = code_of([&] { decode_checkpoint(cut); });
    CHECK((code == Errc::CorruptPayload || (len >= 8 && code == Errc::BadVersion) || (len >= 8 && code == Errc::BadMagic)));
    if (len >= 16) CHECK(code == Errc::CorruptPayload);
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto flipped = bytes;
    flipped[i] ^= 0x10;
    CHECK_THROWS_AS(decode_checkpoint(flipped), Error);
  }
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { decode_checkpoint(bad_magic); }) == Errc::BadMagic);
  auto future = bytes;
  future[8] = static_cast<std::uint8_t>(kCheckpointVersion + 1);
  CHECK(code_of([&] { decode_checkpoint(future); }) == Errc::BadVersion);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(code_of([&] { decode_checkpoint(trailing); }) == Errc::CorruptPayload);
}

TEST_CASE("file errors") {
  testutil::TempDir tmp("ckpt");
  CHECK(code_of([&] { save_checkpoint(tmp.path / "no" / "such" / "dir" / "x.ckpt", sample_model()); }) == Errc::IoFailure);
  CHECK(code_of([&] { load_checkpoint(tmp.path / "missing.ckpt"); }) == Errc::IoFailure);
  auto bytes = encode_checkpoint(sample_model(), std::nullopt);
  bytes.resize(bytes.size() / 2);
  testutil::write_all(tmp.path / "half.ckpt", bytes);
  CHECK(code_of([&] { load_checkpoint(tmp.path / "half.ckpt"); }) == Errc::CorruptPayload);
}
