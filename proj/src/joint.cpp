#include "lowshot/joint.hpp"

#include "lowshot/cosine_head.hpp"
#include "lowshot/error.hpp"
#include "lowshot/losses.hpp"
#include "lowshot/random.hpp"
#include "lowshot/trainer.hpp"

#include <algorithm>
#include <string>

namespace lowshot {
namespace {

EmbedderConfig unnormalized(EmbedderConfig c) {
  c.normalize = false;
  return c;
}

}  // namespace

JointClassifier::JointClassifier(EmbedderConfig config, std::vector<ClassId> class_ids, std::uint64_t seed)
    : net_(unnormalized(std::move(config))), class_ids_(std::move(class_ids)) {
  if (class_ids_.empty()) throw Error(Errc::InvalidShape, "classifier needs at least one class");
  const std::size_t d = net_.output_dim();
  head_.add("weight", xavier_uniform(class_ids_.size(), d, derive_seed(seed, {0x4A})));
  head_.add("bias", Matrix::Zero(static_cast<Eigen::Index>(class_ids_.size()), 1));
}

Vector JointClassifier::logits(const Vector& x) const {
  const Vector z = net_.embed(x);
  Vector out = head_.value("bias").col(0);
  const Matrix& w = head_.value("weight");
  for (Eigen::Index c = 0; c < w.rows(); ++c) {
    const Vector row = w.row(c).transpose();
    out[c] += dot(row, z);
  }
  return out;
}

ClassId JointClassifier::predict(const Vector& x) const {
  const Vector l = logits(x);
  return class_ids_[argmax_first(as_span(l))];
}

double JointClassifier::batch_loss(const Matrix& inputs, std::span<const std::size_t> columns, ParamSet* net_grads,
                                   ParamSet* head_grads) const {
  EmbeddingNet::Cache cache;
  const Matrix z = net_.forward(inputs, cache);
  Matrix logits = head_.value("weight") * z;
  logits.colwise() += head_.value("bias").col(0);
  Matrix d_logits;
  const bool want = net_grads && head_grads;
  const double loss = softmax_cross_entropy(logits, columns, want ? &d_logits : nullptr);
  if (want) {
    *head_grads = head_.zeros_like();
    *net_grads = net_.params().zeros_like();
    head_grads->value("weight") = d_logits * z.transpose();
    head_grads->value("bias").col(0) = d_logits.rowwise().sum();
    net_.backward(cache, head_.value("weight").transpose() * d_logits, *net_grads);
  }
  return loss;
}

JointTrainResult train_joint(const EmbedderConfig& config, const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw Error(Errc::EmptyDataset, "no training examples");
  JointTrainResult result{JointClassifier(config, data.catalog, cfg.seed), {}};
  JointClassifier& clf = result.classifier;

  std::vector<std::size_t> columns(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto it = std::find(data.catalog.begin(), data.catalog.end(), data.labels[i]);
    if (it == data.catalog.end()) throw Error(Errc::MissingClassColumn, "label " + std::to_string(data.labels[i]));
    columns[i] = static_cast<std::size_t>(it - data.catalog.begin());
  }

  OptimState state;
  ParamSet net_grads;
  ParamSet head_grads;
  const AugmentParams aug = training_augment(data, cfg);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::vector<std::size_t> order = epoch_order(data.labels, cfg, e);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, count);
      const Matrix inputs = gather_batch(data, rows, aug, cfg.seed, e, start);
      std::vector<std::size_t> batch_columns(count);
      for (std::size_t b = 0; b < count; ++b) batch_columns[b] = columns[rows[b]];
      loss_sum += clf.batch_loss(inputs, batch_columns, &net_grads, &head_grads);
      rmsprop_step(clf.net_params(), net_grads, state, "embedder", cfg);
      rmsprop_step(clf.head_params(), head_grads, state, "head", cfg);
      ++state.step;
      ++batches;
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(batches));
    ++state.epoch;
  }
  return result;
}

}  // namespace lowshot
