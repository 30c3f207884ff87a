#include "lowshot/benchmark.hpp"

#include "lowshot/error.hpp"
#include "lowshot/eval.hpp"
#include "lowshot/imprint.hpp"
#include "lowshot/joint.hpp"
#include "lowshot/random.hpp"
#include "lowshot/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace lowshot {
namespace {

// Seed-derivation tags; one per independent random consumer in a cell.
enum : std::uint64_t {
  kEmbedderInit = 1,
  kHeadInit,
  kBaseTrain,
  kSupport,
  kRandomColumns,
  kAugment,
  kFinetune,
  kJoint,
};

std::vector<Vector> embed_rows(const EmbeddingNet& net, const LabeledDataset& d) {
  std::vector<Vector> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back(net.embed(d.example(i)));
  return out;
}

struct Scores {
  std::vector<ClassId> predictions;
  std::optional<std::vector<ClassId>> restricted;  // novel-only competition
};

/// Everything one seed's cells share.
struct SeedContext {
  const DatasetPair& data;
  const BaseNovelSplit& split;
  const BenchmarkOptions& options;
  std::uint64_t seed;
  LabeledDataset base_train;
  Model base_model;
  std::vector<Vector> base_test_embeddings;
};

Scores score_head(const Model& model, const LabeledDataset& test, const std::vector<Vector>* cached,
                  const std::vector<ClassId>* novel) {
  std::vector<Vector> local;
  if (!cached) local = embed_rows(model.embedder, test);
  const std::vector<Vector>& emb = cached ? *cached : local;
  Scores s;
  s.predictions = model.head.predict_all(emb);
  if (novel) {
    // Same templates, only the novel columns compete.
    std::vector<std::size_t> cols;
    for (ClassId id : *novel) cols.push_back(*model.head.column_of(id));
    Matrix w(model.head.dim(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) w.col(static_cast<Eigen::Index>(k)) = model.head.weights().col(static_cast<Eigen::Index>(cols[k]));
    const CosineHead restricted(w, *novel, model.head.scale());
    s.restricted = restricted.predict_all(emb);
  }
  return s;
}

Scores score_nearest_neighbor(const SeedContext& ctx, std::span<const SupportSet> support) {
  Scores out;
  std::vector<ClassId> restricted;
  out.predictions = nearest_neighbor_predictions(ctx.base_model, ctx.split.base, support, ctx.base_test_embeddings, &restricted);
  out.restricted = std::move(restricted);
  return out;
}

}  // namespace

AugmentParams cell_imprint_augment(const BenchmarkOptions& o, const LabeledDataset& train) {
  AugmentParams p = o.augment;
  p.image_shape = train.image_shape;
  if (train.image_shape && p.kind == AugmentKind::jitter) p.kind = AugmentKind::flip_crop;
  if (!train.image_shape && (p.kind == AugmentKind::flip || p.kind == AugmentKind::crop || p.kind == AugmentKind::flip_crop)) {
    p.kind = AugmentKind::jitter;
  }
  return p;
}

Model train_base_model(const DatasetPair& data, const BaseNovelSplit& split, const BenchmarkOptions& options,
                       std::uint64_t seed, std::vector<double>* loss_history) {
  EmbedderConfig ecfg = options.embedder;
  ecfg.input_dim = data.train.input_dim();
  ecfg.seed = derive_seed(seed, {kEmbedderInit});
  ecfg.normalize = true;
  const Model init{EmbeddingNet(ecfg), CosineHead::random(ecfg.embedding_dim, split.base, derive_seed(seed, {kHeadInit})), {}};
  TrainConfig cfg = options.base_train;
  cfg.seed = derive_seed(seed, {kBaseTrain});
  TrainResult r = train_base(init, data.train.filter_classes(split.base), cfg);
  if (loss_history) *loss_history = std::move(r.loss_history);
  return std::move(r.model);
}

std::vector<SupportSet> sample_cell_support(const LabeledDataset& train, const BaseNovelSplit& split, std::size_t n,
                                            std::uint64_t seed) {
  return sample_support(train, split.novel, n, derive_seed(seed, {kSupport, n}));
}

Model build_cell_model(ConfigKind config, const Model& base, std::span<const SupportSet> support,
                       const DatasetPair& data, const BaseNovelSplit& split, const BenchmarkOptions& options,
                       std::uint64_t seed, std::size_t n) {
  switch (config) {
    case ConfigKind::RandNoFT:
      return add_random_columns(base, split.novel, derive_seed(seed, {kRandomColumns, n}));
    case ConfigKind::Imprinting:
      return imprint_all(base, support);
    case ConfigKind::ImprintingAug: {
      const AugmentParams aug = cell_imprint_augment(options, data.train);
      Model m = base;
      for (const SupportSet& s : support) {
        m = imprint_augmented(m, s, aug, options.aug_copies, derive_seed(seed, {kAugment, n, static_cast<std::uint64_t>(s.label)}));
      }
      return m;
    }
    case ConfigKind::RandFT:
    case ConfigKind::ImprintingFT: {
      const Model start = build_cell_model(config == ConfigKind::RandFT ? ConfigKind::RandNoFT : ConfigKind::Imprinting, base,
                                           support, data, split, options, seed, n);
      return finetune(start, data.train.filter_classes(split.base), support, cell_finetune_config(options, seed, n)).model;
    }
    case ConfigKind::AllClassJoint:
    case ConfigKind::NearestNeighbor:
      break;
  }
  throw Error(Errc::InvalidConfig, std::string(config_name(config)) + " has no cosine-head model");
}

TrainConfig cell_finetune_config(const BenchmarkOptions& options, std::uint64_t seed, std::size_t n) {
  TrainConfig cfg = options.finetune;
  cfg.seed = derive_seed(seed, {kFinetune, n});
  return cfg;
}

std::vector<ClassId> nearest_neighbor_predictions(const Model& model, std::span<const ClassId> base_classes,
                                                  std::span<const SupportSet> support, std::span<const Vector> queries,
                                                  std::vector<ClassId>* restricted) {
  EmbeddingStore combined;
  EmbeddingStore novel_only;
  for (ClassId id : base_classes) {
    const auto col = model.head.column_of(id);
    if (!col) throw Error(Errc::MissingClassColumn, "base class " + std::to_string(id) + " has no column");
    combined.add(model.head.weights().col(static_cast<Eigen::Index>(*col)), id);
  }
  for (const SupportSet& s : support) {
    for (const Vector& x : s.examples) {
      const Vector e = model.embed(x);
      combined.add(e, s.label);
      novel_only.add(e, s.label);
    }
  }
  std::vector<ClassId> out;
  out.reserve(queries.size());
  if (restricted) restricted->clear();
  for (const Vector& q : queries) {
    out.push_back(combined.nn_predict(q));
    if (restricted) restricted->push_back(novel_only.nn_predict(q));
  }
  return out;
}

std::string_view config_name(ConfigKind c) noexcept {
  switch (c) {
    case ConfigKind::RandNoFT: return "Rand-noFT";
    case ConfigKind::Imprinting: return "Imprinting";
    case ConfigKind::ImprintingAug: return "Imprinting+Aug";
    case ConfigKind::RandFT: return "Rand+FT";
    case ConfigKind::ImprintingFT: return "Imprinting+FT";
    case ConfigKind::AllClassJoint: return "AllClassJoint";
    case ConfigKind::NearestNeighbor: return "NearestNeighbor";
  }
  return "?";
}

std::vector<ConfigKind> all_configs() {
  return {ConfigKind::RandNoFT, ConfigKind::Imprinting,    ConfigKind::ImprintingAug,  ConfigKind::RandFT,
          ConfigKind::ImprintingFT, ConfigKind::AllClassJoint, ConfigKind::NearestNeighbor};
}

ConfigKind parse_config(std::string_view name) {
  for (ConfigKind c : all_configs())
    if (config_name(c) == name) return c;
  throw Error(Errc::UnknownConfig, "unknown configuration '" + std::string(name) + "'");
}

BenchmarkOptions default_benchmark_options() {
  BenchmarkOptions o;
  o.embedder.hidden_dims = {128};
  o.embedder.embedding_dim = 64;
  o.base_train.epochs = 10;
  o.base_train.oversample_novel = false;
  o.finetune.epochs = 8;
  o.finetune.augment = true;
  o.finetune.oversample_novel = true;
  o.joint.epochs = 20;
  o.joint.augment = true;
  o.joint.oversample_novel = true;
  o.augment.kind = AugmentKind::jitter;
  o.augment.jitter_sigma = 0.05;
  o.aug_copies = 5;
  return o;
}

std::optional<double> EvalReport::value(ConfigKind c, std::size_t shots, std::uint64_t seed, std::string_view m) const {
  for (const ReportRow& r : rows)
    if (r.config == c && r.shots == shots && r.seed == seed && r.metric == m) return r.value;
  return std::nullopt;
}

std::vector<double> EvalReport::values(ConfigKind c, std::size_t shots, std::string_view m) const {
  std::vector<double> out;
  for (std::uint64_t seed : seeds)
    if (auto v = value(c, shots, seed, m)) out.push_back(*v);
  return out;
}

SeedSummary EvalReport::summary(ConfigKind c, std::size_t shots, std::string_view m) const {
  const auto v = values(c, shots, m);
  SeedSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

EvalReport run_benchmark(const DatasetPair& data, const BaseNovelSplit& split, std::span<const std::size_t> shots,
                         std::span<const ConfigKind> configs, std::span<const std::uint64_t> seeds,
                         const BenchmarkOptions& options) {
  if (seeds.empty()) throw Error(Errc::InvalidConfig, "at least one seed is required");
  if (shots.empty()) throw Error(Errc::InvalidConfig, "at least one shot count is required");
  const auto started = std::chrono::steady_clock::now();
  EvalReport report;
  report.seeds.assign(seeds.begin(), seeds.end());

  const std::vector<ClassId>& novel = split.novel;
  const std::optional<std::vector<ClassId>> novel_filter = novel;

  for (std::uint64_t seed : seeds) {
    SeedContext ctx{data, split, options, seed, data.train.filter_classes(split.base),
                    train_base_model(data, split, options, seed, nullptr), {}};
    ctx.base_test_embeddings = embed_rows(ctx.base_model.embedder, data.test);

    for (std::size_t n : shots) {
      const auto support = sample_cell_support(data.train, split, n, seed);
      // Rand+FT and Imprinting+FT reuse the untrained models built here.
      std::map<ConfigKind, Model> cache;
      auto cell = [&](ConfigKind k) -> const Model& {
        auto it = cache.find(k);
        if (it == cache.end()) it = cache.emplace(k, build_cell_model(k, ctx.base_model, support, data, split, options, seed, n)).first;
        return it->second;
      };

      for (ConfigKind config : configs) {
        Scores scores;
        switch (config) {
          case ConfigKind::RandNoFT:
            scores = score_head(cell(config), data.test, &ctx.base_test_embeddings, nullptr);
            break;
          case ConfigKind::Imprinting:
          case ConfigKind::ImprintingAug:
            scores = score_head(cell(config), data.test, &ctx.base_test_embeddings, &novel);
            break;
          case ConfigKind::RandFT:
          case ConfigKind::ImprintingFT: {
            const ConfigKind start = config == ConfigKind::RandFT ? ConfigKind::RandNoFT : ConfigKind::Imprinting;
            const Model tuned = finetune(cell(start), ctx.base_train, support, cell_finetune_config(options, seed, n)).model;
            scores = score_head(tuned, data.test, nullptr, nullptr);
            break;
          }
          case ConfigKind::AllClassJoint: {
            TrainConfig jcfg = options.joint;
            jcfg.seed = derive_seed(seed, {kJoint, n});
            EmbedderConfig jecfg = options.embedder;
            jecfg.input_dim = data.train.input_dim();
            jecfg.seed = derive_seed(seed, {kEmbedderInit});
            const auto joint = train_joint(jecfg, merge_support(ctx.base_train, support), jcfg);
            for (std::size_t i = 0; i < data.test.size(); ++i) scores.predictions.push_back(joint.classifier.predict(data.test.example(i)));
            break;
          }
          case ConfigKind::NearestNeighbor:
            scores = score_nearest_neighbor(ctx, support);
            break;
        }

        auto add = [&](std::string_view m, double v) { report.rows.push_back({config, n, seed, std::string(m), v}); };
        add(metric::novel, accuracy_of(scores.predictions, data.test, novel_filter));
        add(metric::all, accuracy_of(scores.predictions, data.test));
        if (scores.restricted) add(metric::novel_restricted, accuracy_of(*scores.restricted, data.test, novel_filter));
        for (const auto& [label, acc] : per_class_accuracy(scores.predictions, data.test)) {
          report.per_class.push_back({config, n, seed, label, acc});
        }
        if (options.keep_predictions) report.predictions[{config, n, seed}] = std::move(scores.predictions);
      }
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

namespace {

void write_config_comment(std::ostream& out, const std::string& config) {
  std::stringstream ss(config);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out << "# " << line << '\n';
}

}  // namespace

void write_report_table(std::ostream& out, const EvalReport& report) {
  write_config_comment(out, report.resolved_config);
  std::vector<std::tuple<ConfigKind, std::size_t>> cells;
  std::vector<std::string> metrics;
  for (const ReportRow& r : report.rows) {
    if (std::find(cells.begin(), cells.end(), std::make_tuple(r.config, r.shots)) == cells.end()) cells.emplace_back(r.config, r.shots);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %4s", "config", "n");
  out << buf;
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "  %-26s", (m + " mean [min,max]").c_str());
    out << buf;
  }
  out << "\n";
  for (const auto& [config, n] : cells) {
    std::snprintf(buf, sizeof buf, "%-16s %4zu", std::string(config_name(config)).c_str(), n);
    out << buf;
    for (const auto& m : metrics) {
      const SeedSummary s = report.summary(config, n, m);
      if (s.count == 0) {
        std::snprintf(buf, sizeof buf, "  %-26s", "-");
      } else {
        std::snprintf(buf, sizeof buf, "  %6.2f [%6.2f,%6.2f]     ", 100.0 * s.mean, 100.0 * s.min, 100.0 * s.max);
      }
      out << buf;
    }
    out << "\n";
  }
  out << "seeds: " << report.seeds.size() << '\n';
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  write_config_comment(out, report.resolved_config);
  out << "config,n,seed,metric,value\n";
  char buf[64];
  for (const ReportRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << config_name(r.config) << ',' << r.shots << ',' << r.seed << ',' << r.metric << ',' << buf << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && line.starts_with('#')) {
  }
  if (line != "config,n,seed,metric,value") {
    throw Error(Errc::CorruptPayload, "report header missing");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) throw Error(Errc::CorruptPayload, "bad report line '" + line + "'");
    rows.push_back({parse_config(f[0]), std::stoul(f[1]), std::stoull(f[2]), f[3], std::stod(f[4])});
  }
  return rows;
}

}  // namespace lowshot
