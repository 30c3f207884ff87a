#pragma once

#include "lowshot/data.hpp"
#include "lowshot/embedder.hpp"
#include "lowshot/optim.hpp"

#include <vector>

namespace lowshot {

/// Conventional classifier baseline: unnormalized MLP embedding followed by
/// a linear layer with bias, trained on all classes at once.
class JointClassifier {
 public:
  JointClassifier(EmbedderConfig config, std::vector<ClassId> class_ids, std::uint64_t seed);

  const std::vector<ClassId>& class_ids() const { return class_ids_; }
  const EmbeddingNet& embedder() const { return net_; }

  Vector logits(const Vector& x) const;
  /// Lowest column wins ties.
  ClassId predict(const Vector& x) const;

  /// Mean cross-entropy and gradient over a batch (columns of `inputs`).
  double batch_loss(const Matrix& inputs, std::span<const std::size_t> columns, ParamSet* net_grads,
                    ParamSet* head_grads) const;

  ParamSet& net_params() { return net_.params(); }
  ParamSet& head_params() { return head_; }
  const ParamSet& head_params() const { return head_; }

 private:
  EmbeddingNet net_;
  ParamSet head_;  // "weight" (C x D), "bias" (C x 1)
  std::vector<ClassId> class_ids_;
};

struct JointTrainResult {
  JointClassifier classifier;
  std::vector<double> loss_history;
};

/// Trains from scratch on `data` (all parameters fresh).
JointTrainResult train_joint(const EmbedderConfig& config, const LabeledDataset& data, const TrainConfig& cfg);

}  // namespace lowshot
