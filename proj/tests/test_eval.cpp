#include "helpers.hpp"
#include "lowshot/benchmark.hpp"
#include "lowshot/error.hpp"
#include "lowshot/eval.hpp"

#include <doctest.h>

#include <sstream>

using namespace lowshot;
using testutil::code_of;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

LabeledDataset balanced(std::size_t classes, std::size_t per_class) {
  LabeledDataset d;
  d.inputs = Matrix::Zero(2, static_cast<Eigen::Index>(classes * per_class));
  for (std::size_t c = 0; c < classes; ++c) {
    d.catalog.push_back(static_cast<ClassId>(c));
    for (std::size_t i = 0; i < per_class; ++i) d.labels.push_back(static_cast<ClassId>(c));
  }
  d.split = SplitTag::test;
  return d;
}

struct SmallBench {
  DatasetPair data;
  BaseNovelSplit split;
  BenchmarkOptions opts;
};

SmallBench small_bench() {
  SyntheticSpec spec;
  spec.num_classes = 20;
  spec.per_class_train = 6;
  spec.per_class_test = 4;
  spec.input_dim = 16;
  spec.seed = 3;
  SmallBench b{gen_synthetic(spec), {}, default_benchmark_options()};
  b.split = split_base_novel(b.data.train, 10);
  b.opts.embedder.hidden_dims = {16};
  b.opts.embedder.embedding_dim = 8;
  b.opts.base_train.epochs = 2;
  b.opts.finetune.epochs = 1;
  b.opts.joint.epochs = 2;
  b.opts.aug_copies = 2;
  return b;
}

}  // namespace

TEST_CASE("accuracy basics") {
  const LabeledDataset d = balanced(10, 5);
  CHECK(accuracy_of(d.labels, d) == 1.0);
  CHECK(top1_accuracy([](const Vector&) { return ClassId{3}; }, d) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(top1_accuracy([](const Vector&) { return ClassId{3}; }, d, std::vector<ClassId>{3}) == 1.0);
  CHECK(code_of([&] { top1_accuracy([](const Vector&) { return ClassId{0}; }, d, std::vector<ClassId>{42}); }) ==
        Errc::EmptyFilteredSet);
  std::vector<ClassId> preds(d.size(), 2);
  const auto pc = per_class_accuracy(preds, d);
  CHECK(pc.size() == 10);
  CHECK(pc.at(2) == 1.0);
  CHECK(pc.at(5) == 0.0);
}

TEST_CASE("nearest-neighbor store") {
  EmbeddingStore store;
  CHECK(code_of([&] { store.nn_predict(vec({1, 0})); }) == Errc::EmptyStore);
  store.add(vec({1, 0}), 1);
  CHECK(store.nn_predict(vec({-1, 0})) == 1);
  CHECK(store.nn_predict(vec({0, 1})) == 1);
  store.add(vec({0, 1}), 2);
  CHECK(store.nn_predict(l2_normalize(vec({0.9, 0.1}))) == 1);
  CHECK(store.nn_predict(l2_normalize(vec({0.1, 0.9}))) == 2);
  CHECK(store.nn_predict(l2_normalize(vec({1, 1}))) == 1);
  store.add(vec({0, 3}), 3);
  CHECK(store.size() == 3);
  CHECK(store.nn_predict(vec({0, 1})) == 2);
}

TEST_CASE("config names") {
  for (ConfigKind c : all_configs()) CHECK(parse_config(config_name(c)) == c);
  CHECK(config_name(ConfigKind::ImprintingFT) == "Imprinting+FT");
  CHECK(code_of([] { parse_config("Imprint"); }) == Errc::UnknownConfig);
  CHECK(all_configs().size() == 7);
}

TEST_CASE("benchmark: one-shot imprinting equals nearest neighbor") {
  SmallBench b = small_bench();
  b.opts.keep_predictions = true;
  const std::vector<std::size_t> shots{1, 2};
  const std::vector<ConfigKind> configs{ConfigKind::Imprinting, ConfigKind::NearestNeighbor};
  const std::vector<std::uint64_t> seeds{0, 1};
  const EvalReport r = run_benchmark(b.data, b.split, shots, configs, seeds, b.opts);
  for (std::uint64_t s : seeds) {
    CHECK(r.predictions.at({ConfigKind::Imprinting, 1, s}) == r.predictions.at({ConfigKind::NearestNeighbor, 1, s}));
    for (auto m : {metric::novel, metric::all, metric::novel_restricted})
      CHECK(*r.value(ConfigKind::Imprinting, 1, s, m) == *r.value(ConfigKind::NearestNeighbor, 1, s, m));
  }
}

TEST_CASE("benchmark is deterministic and complete") {
  const SmallBench b = small_bench();
  const std::vector<std::size_t> shots{1, 2};
  const auto configs = all_configs();
  const std::vector<std::uint64_t> seeds{5};
  const EvalReport a = run_benchmark(b.data, b.split, shots, configs, seeds, b.opts);
  const EvalReport c = run_benchmark(b.data, b.split, shots, configs, seeds, b.opts);
  REQUIRE(a.rows.size() == c.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].config == c.rows[i].config);
    CHECK(a.rows[i].metric == c.rows[i].metric);
    CHECK(a.rows[i].value == c.rows[i].value);
  }
  for (ConfigKind k : configs)
    for (std::size_t n : shots) {
      CHECK(a.value(k, n, 5, metric::novel).has_value());
      CHECK(a.value(k, n, 5, metric::all).has_value());
    }
  CHECK(a.per_class.size() > 0);
  const SeedSummary s = a.summary(ConfigKind::Imprinting, 1, metric::novel);
  CHECK(s.count == 1);
  CHECK(s.min == s.max);
}

TEST_CASE("report csv round trip") {
  const SmallBench b = small_bench();
  const std::vector<std::size_t> shots{1};
  const std::vector<ConfigKind> configs{ConfigKind::RandNoFT, ConfigKind::Imprinting};
  const std::vector<std::uint64_t> seeds{0, 1};
  EvalReport r = run_benchmark(b.data, b.split, shots, configs, seeds, b.opts);
  r.resolved_config = "seed=0\nshots=1\n";
  std::stringstream ss;
  write_report_csv(ss, r);
  CHECK(ss.str().rfind("# seed=0\n# shots=1\nconfig,n,seed,metric,value\n", 0) == 0);
  const auto rows = read_report_csv(ss);
  REQUIRE(rows.size() == r.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].config == r.rows[i].config);
    CHECK(rows[i].shots == r.rows[i].shots);
    CHECK(rows[i].seed == r.rows[i].seed);
    CHECK(rows[i].metric == r.rows[i].metric);
    CHECK(rows[i].value == r.rows[i].value);
  }
  std::ostringstream table;
  write_report_table(table, r);
  CHECK(table.str().find("Rand-noFT") != std::string::npos);
}
