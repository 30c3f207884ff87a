#pragma once

#include "lowshot/data.hpp"
#include "lowshot/model.hpp"
#include "lowshot/optim.hpp"
#include "lowshot/random.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lowshot {

struct TrainResult {
  Model model;
  OptimState state;
  /// Mean mini-batch loss of each epoch.
  std::vector<double> loss_history;
};

/// Draws a class uniformly, then an example uniformly within it, so every
/// class has the same expected frequency whatever its size.
class BalancedSampler {
 public:
  BalancedSampler(std::span<const ClassId> labels, std::uint64_t seed);

  /// Row index of the next draw.
  std::size_t next();
  std::size_t class_count() const { return by_class_.size(); }
  /// Class (in first-appearance order) of a row returned by next().
  const std::vector<ClassId>& classes() const { return classes_; }

 private:
  std::vector<ClassId> classes_;
  std::vector<std::vector<std::size_t>> by_class_;
  CounterRng rng_;
};

/// Mini-batch order for one epoch: a permutation of [0, n) seeded by
/// (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Row order for one epoch: balanced draws (as many as there are rows) when
/// `cfg.oversample_novel`, otherwise a permutation.
std::vector<std::size_t> epoch_order(std::span<const ClassId> labels, const TrainConfig& cfg, std::size_t epoch);

/// Augmentation applied to training inputs: identity unless `cfg.augment`,
/// then flip + crop for images and Gaussian jitter for vectors.
AugmentParams training_augment(const LabeledDataset& data, const TrainConfig& cfg);

/// Input columns for `rows`, each augmented with a seed derived from
/// (seed, epoch, offset + position).
Matrix gather_batch(const LabeledDataset& data, std::span<const std::size_t> rows, const AugmentParams& aug,
                    std::uint64_t seed, std::size_t epoch, std::size_t offset);

/// End-to-end training of embedder and head on the base classes with mean
/// softmax cross-entropy. The head must cover exactly the classes present in
/// `base`. Afterwards every tensor (embedder and head) is tagged pretrained.
/// Throws EmptyDataset, MissingClassColumn, InvalidConfig.
TrainResult train_base(const Model& model, const LabeledDataset& base, const TrainConfig& cfg);

/// Continues end-to-end training over the base data plus the novel support
/// examples. The head must already have a column for every label. With
/// `oversample_novel` every mini-batch draws classes uniformly.
TrainResult finetune(const Model& model, const LabeledDataset& base, std::span<const SupportSet> support,
                     const TrainConfig& cfg);

/// Shared loop used by train_base and finetune, exposed for tooling.
TrainResult train_epochs(const Model& model, const LabeledDataset& data, const TrainConfig& cfg,
                         OptimState state);

/// Base data followed by every support example as one training set.
LabeledDataset merge_support(const LabeledDataset& base, std::span<const SupportSet> support);

}  // namespace lowshot
