#include "lowshot/trainer.hpp"

#include "lowshot/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace lowshot {
namespace {

constexpr std::uint64_t kShuffleTag = 0x5F;
constexpr std::uint64_t kSamplerTag = 0x5B;
constexpr std::uint64_t kAugmentTag = 0xA6;

}  // namespace

BalancedSampler::BalancedSampler(std::span<const ClassId> labels, std::uint64_t seed) : rng_(seed) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::find(classes_.begin(), classes_.end(), labels[i]);
    if (it == classes_.end()) {
      classes_.push_back(labels[i]);
      by_class_.emplace_back();
      it = classes_.end() - 1;
    }
    by_class_[static_cast<std::size_t>(it - classes_.begin())].push_back(i);
  }
  if (classes_.empty()) throw Error(Errc::EmptyDataset, "sampler over no examples");
}

std::size_t BalancedSampler::next() {
  const auto& rows = by_class_[rng_.below(by_class_.size())];
  return rows[rng_.below(rows.size())];
}

AugmentParams training_augment(const LabeledDataset& data, const TrainConfig& cfg) {
  AugmentParams p;
  p.image_shape = data.image_shape;
  if (!cfg.augment) {
    p.kind = AugmentKind::identity;
  } else if (data.image_shape) {
    p.kind = AugmentKind::flip_crop;
  } else {
    p.kind = cfg.jitter_sigma > 0.0 ? AugmentKind::jitter : AugmentKind::identity;
    p.jitter_sigma = cfg.jitter_sigma;
  }
  return p;
}

std::vector<std::size_t> epoch_order(std::span<const ClassId> labels, const TrainConfig& cfg, std::size_t epoch) {
  if (!cfg.oversample_novel) return epoch_permutation(labels.size(), cfg.seed, epoch);
  BalancedSampler sampler(labels, derive_seed(cfg.seed, {kSamplerTag, epoch}));
  std::vector<std::size_t> order(labels.size());
  for (auto& row : order) row = sampler.next();
  return order;
}

Matrix gather_batch(const LabeledDataset& data, std::span<const std::size_t> rows, const AugmentParams& aug,
                    std::uint64_t seed, std::size_t epoch, std::size_t offset) {
  Matrix inputs(static_cast<Eigen::Index>(data.input_dim()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    if (aug.kind == AugmentKind::identity) {
      inputs.col(col) = data.inputs.col(static_cast<Eigen::Index>(rows[b]));
    } else {
      inputs.col(col) = augment(data.example(rows[b]), aug, derive_seed(seed, {kAugmentTag, epoch, offset + b}));
    }
  }
  return inputs;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, {kShuffleTag, epoch}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

TrainResult train_epochs(const Model& model, const LabeledDataset& data, const TrainConfig& cfg, OptimState state) {
  cfg.validate();
  if (data.size() == 0) throw Error(Errc::EmptyDataset, "no training examples");
  std::vector<std::size_t> columns(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto col = model.head.column_of(data.labels[i]);
    if (!col) throw Error(Errc::MissingClassColumn, "label " + std::to_string(data.labels[i]) + " has no head column");
    columns[i] = *col;
  }

  TrainResult result{model, std::move(state), {}};
  const AugmentParams aug = training_augment(data, cfg);
  ModelGrads grads;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto epoch = static_cast<std::size_t>(result.state.epoch);
    const std::vector<std::size_t> order = epoch_order(data.labels, cfg, epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, count);
      const Matrix inputs = gather_batch(data, rows, aug, cfg.seed, epoch, start);
      std::vector<std::size_t> batch_columns(count);
      for (std::size_t b = 0; b < count; ++b) batch_columns[b] = columns[rows[b]];
      loss_sum += batch_loss(result.model, inputs, batch_columns, &grads, cfg.train_scale);
      rmsprop_step(result.model.embedder.params(), grads.embedder, result.state, "embedder", cfg);
      rmsprop_step(result.model.head.params(), grads.head, result.state, "head", cfg);
      ++result.state.step;
      ++batches;
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(batches));
    ++result.state.epoch;
  }
  return result;
}

TrainResult train_base(const Model& model, const LabeledDataset& base, const TrainConfig& cfg) {
  if (base.size() == 0) throw Error(Errc::EmptyDataset, "base dataset is empty");
  const std::set<ClassId> present(base.labels.begin(), base.labels.end());
  const std::set<ClassId> head(model.head.class_ids().begin(), model.head.class_ids().end());
  if (present != head) throw Error(Errc::MissingClassColumn, "head classes must equal the base classes");
  TrainResult r = train_epochs(model, base, cfg, OptimState{});
  r.model.embedder.params().set_group(ParamGroup::pretrained);
  r.model.head.params().set_group(ParamGroup::pretrained);
  return r;
}

LabeledDataset merge_support(const LabeledDataset& base, std::span<const SupportSet> support) {
  std::size_t extra = 0;
  for (const auto& s : support) extra += s.examples.size();
  LabeledDataset out;
  out.split = SplitTag::train;
  out.image_shape = base.image_shape;
  out.catalog = base.catalog;
  out.labels = base.labels;
  const Eigen::Index dim = base.size() > 0 ? base.inputs.rows()
                           : (extra > 0 ? support.front().examples.front().size() : 0);
  out.inputs.resize(dim, static_cast<Eigen::Index>(base.size() + extra));
  if (base.size() > 0) out.inputs.leftCols(base.inputs.cols()) = base.inputs;
  Eigen::Index col = static_cast<Eigen::Index>(base.size());
  for (const auto& s : support) {
    if (std::find(out.catalog.begin(), out.catalog.end(), s.label) == out.catalog.end()) out.catalog.push_back(s.label);
    for (const Vector& x : s.examples) {
      out.inputs.col(col++) = x;
      out.labels.push_back(s.label);
    }
  }
  return out;
}

TrainResult finetune(const Model& model, const LabeledDataset& base, std::span<const SupportSet> support,
                     const TrainConfig& cfg) {
  return train_epochs(model, merge_support(base, support), cfg, OptimState{});
}

}  // namespace lowshot
