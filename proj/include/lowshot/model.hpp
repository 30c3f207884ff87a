#pragma once

#include "lowshot/cosine_head.hpp"
#include "lowshot/embedder.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>

namespace lowshot {

/// Embedding extractor followed by the cosine classifier.
struct Model {
  EmbeddingNet embedder;
  CosineHead head;
  /// Free-form provenance (seed, stage, resolved command line) carried into
  /// checkpoints.
  std::map<std::string, std::string> provenance;

  Vector embed(const Vector& x) const { return embedder.embed(x); }
  ClassId predict(const Vector& x) const { return head.predict(embed(x)); }
  Vector logits(const Vector& x) const { return head.logits(embed(x)); }
  std::size_t parameter_count() const {
    return embedder.params().scalar_count() + head.parameter_count();
  }
};

struct ModelGrads {
  ParamSet embedder;
  ParamSet head;
};

ModelGrads zero_grads(const Model& model);

/// Mean cross-entropy of the full pipeline on a batch (columns of `inputs`),
/// with `columns[b]` the head column of example b. When `grads` is given
/// they are overwritten with the gradient. `train_scale` = false leaves the
/// log_scale gradient at zero.
double batch_loss(const Model& model, const Matrix& inputs, std::span<const std::size_t> columns,
                  ModelGrads* grads, bool train_scale = true);

}  // namespace lowshot
