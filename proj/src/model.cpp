#include "lowshot/model.hpp"

#include "lowshot/losses.hpp"

namespace lowshot {

ModelGrads zero_grads(const Model& model) {
  return ModelGrads{model.embedder.params().zeros_like(), model.head.params().zeros_like()};
}

double batch_loss(const Model& model, const Matrix& inputs, std::span<const std::size_t> columns,
                  ModelGrads* grads, bool train_scale) {
  EmbeddingNet::Cache net_cache;
  const Matrix emb = model.embedder.forward(inputs, net_cache);
  CosineHead::Cache head_cache;
  const Matrix logits = model.head.forward(emb, head_cache);
  Matrix d_logits;
  const double loss = softmax_cross_entropy(logits, columns, grads ? &d_logits : nullptr);
  if (grads) {
    *grads = zero_grads(model);
    const Matrix d_emb = model.head.backward(head_cache, emb, d_logits, grads->head, train_scale);
    model.embedder.backward(net_cache, d_emb, grads->embedder);
  }
  return loss;
}

}  // namespace lowshot
