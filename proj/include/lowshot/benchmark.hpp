#pragma once

#include "lowshot/data.hpp"
#include "lowshot/model.hpp"
#include "lowshot/embedder.hpp"
#include "lowshot/optim.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace lowshot {

enum class ConfigKind {
  RandNoFT,
  Imprinting,
  ImprintingAug,
  RandFT,
  ImprintingFT,
  AllClassJoint,
  NearestNeighbor,
};

/// Display names: "Rand-noFT", "Imprinting", "Imprinting+Aug", "Rand+FT",
/// "Imprinting+FT", "AllClassJoint", "NearestNeighbor".
std::string_view config_name(ConfigKind c) noexcept;
/// Throws UnknownConfig.
ConfigKind parse_config(std::string_view name);
std::vector<ConfigKind> all_configs();

/// Metric names used in reports.
namespace metric {
/// Novel-class test rows, classified over every class.
inline constexpr std::string_view novel = "novel";
/// Every test row, classified over every class.
inline constexpr std::string_view all = "all";
/// Novel-class test rows, classified over novel classes only (Imprinting
/// variants and NearestNeighbor).
inline constexpr std::string_view novel_restricted = "novel_restricted";
}  // namespace metric

struct BenchmarkOptions {
  /// input_dim is taken from the data.
  EmbedderConfig embedder;
  TrainConfig base_train;
  TrainConfig finetune;
  TrainConfig joint;
  AugmentParams augment;
  std::size_t aug_copies = 5;
  bool keep_predictions = false;
};

/// Options used for the synthetic benchmark when nothing else is given.
BenchmarkOptions default_benchmark_options();

/// Building blocks of one benchmark cell, shared with tools that run a single
/// cell step by step. Given the same (options, seed, n) they reproduce the
/// models run_benchmark scores.
///
/// Base model for `seed`: fresh embedder and head over split.base trained
/// with options.base_train.
Model train_base_model(const DatasetPair& data, const BaseNovelSplit& split, const BenchmarkOptions& options,
                       std::uint64_t seed, std::vector<double>* loss_history = nullptr);
/// The n-shot support sets of the novel classes.
std::vector<SupportSet> sample_cell_support(const LabeledDataset& train, const BaseNovelSplit& split, std::size_t n,
                                            std::uint64_t seed);
/// Head-based configurations only (not AllClassJoint or NearestNeighbor);
/// throws InvalidConfig otherwise.
Model build_cell_model(ConfigKind config, const Model& base, std::span<const SupportSet> support,
                       const DatasetPair& data, const BaseNovelSplit& split, const BenchmarkOptions& options,
                       std::uint64_t seed, std::size_t n);
TrainConfig cell_finetune_config(const BenchmarkOptions& options, std::uint64_t seed, std::size_t n);
/// Augmentation used by Imprinting+Aug, adapted to the data's modality.
AugmentParams cell_imprint_augment(const BenchmarkOptions& options, const LabeledDataset& train);
/// 1-NN over the base-class columns of `model` plus every support embedding.
/// `restricted`, if given, receives 1-NN over the support embeddings only.
std::vector<ClassId> nearest_neighbor_predictions(const Model& model, std::span<const ClassId> base_classes,
                                                  std::span<const SupportSet> support, std::span<const Vector> queries,
                                                  std::vector<ClassId>* restricted = nullptr);

struct ReportRow {
  ConfigKind config;
  std::size_t shots;
  std::uint64_t seed;
  std::string metric;
  double value;
};

struct ClassAccuracy {
  ConfigKind config;
  std::size_t shots;
  std::uint64_t seed;
  ClassId label;
  double accuracy;
};

struct SeedSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<ClassAccuracy> per_class;
  std::vector<std::uint64_t> seeds;
  double runtime_seconds = 0.0;
  std::string resolved_config;
  /// Test-set predictions per (config, shots, seed), when requested.
  std::map<std::tuple<ConfigKind, std::size_t, std::uint64_t>, std::vector<ClassId>> predictions;

  std::optional<double> value(ConfigKind c, std::size_t shots, std::uint64_t seed,
                              std::string_view metric) const;
  /// Values in seed order.
  std::vector<double> values(ConfigKind c, std::size_t shots, std::string_view metric) const;
  SeedSummary summary(ConfigKind c, std::size_t shots, std::string_view metric) const;
};

/// Runs every (config, shots, seed) cell. Per seed a base model is trained
/// on the base classes of `data.train`; each cell then builds its model and
/// is scored on `data.test`. Deterministic in the seeds.
EvalReport run_benchmark(const DatasetPair& data, const BaseNovelSplit& split,
                         std::span<const std::size_t> shots, std::span<const ConfigKind> configs,
                         std::span<const std::uint64_t> seeds, const BenchmarkOptions& options);

/// Fixed-width table of seed mean [min, max] per config, shots and metric.
/// Both writers start with the resolved config as "# key=value" lines.
void write_report_table(std::ostream& out, const EvalReport& report);

/// CSV with header "config,n,seed,metric,value".
void write_report_csv(std::ostream& out, const EvalReport& report);

/// Parses write_report_csv output back into rows, skipping "#" lines.
std::vector<ReportRow> read_report_csv(std::istream& in);

}  // namespace lowshot
