#pragma once

#include "lowshot/benchmark.hpp"
#include "lowshot/data.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lowshot::cli {

/// Everything a command needs. Field names match the flat config keys with
/// '_' written as '-'.
struct RunConfig {
  std::string command;

  // data
  std::string dataset = "synthetic";
  std::size_t num_classes = 200;
  std::size_t per_class_train = 20;
  std::size_t per_class_test = 10;
  std::size_t input_dim = 128;
  double noise_sigma = 0.1;
  double min_angle = 15.0;
  std::uint64_t data_seed = 0;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t base_classes = 100;

  // model
  std::size_t embedding_dim = 64;
  std::vector<std::size_t> hidden{128};
  std::string activation = "relu";

  // training
  std::size_t epochs = 10;
  std::size_t finetune_epochs = 8;
  std::size_t joint_epochs = 20;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  double fresh_multiplier = 10.0;
  double jitter_sigma = 0.05;
  /// false freezes the classifier scale in every training stage
  bool train_scale = true;

  // protocol
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> shots{1, 2, 5, 10, 20};
  std::size_t n = 1;
  std::string init = "imprint";
  std::size_t aug_copies = 0;
  std::vector<std::string> configs;
  std::vector<std::size_t> dims{64, 128, 256, 512};

  // paths
  std::string checkpoint;
  std::string out = "out";
};

/// Keys describing the data, the split and the architecture. Commands that
/// read a checkpoint take these from the checkpoint unless set explicitly.
const std::vector<std::string>& inherited_keys();

/// "key=value" per line, sorted by key, every key present. Feeding this back
/// through --config reproduces the run.
std::string to_text(const RunConfig& c);
/// Reads one value of to_text output into `c`. Throws UnknownConfig for a
/// key this build does not know.
void set_value(RunConfig& c, const std::string& key, const std::string& value);
std::map<std::string, std::string> parse_text(const std::string& text);

/// Checks everything that can be checked without touching data or models.
/// Throws InvalidConfig or UnknownConfig.
void validate(const RunConfig& c);

/// Seeds of the benchmark-style commands: `seeds` if given, else {seed}.
std::vector<std::uint64_t> run_seeds(const RunConfig& c);
BenchmarkOptions to_options(const RunConfig& c);
DatasetPair load_data(const RunConfig& c);
BaseNovelSplit make_split(const RunConfig& c, const DatasetPair& data);

}  // namespace lowshot::cli
