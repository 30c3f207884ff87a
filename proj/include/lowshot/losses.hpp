#pragma once

#include "lowshot/tensor.hpp"

#include <cstddef>

namespace lowshot {

struct LossValue {
  double loss = 0.0;
  /// d(loss)/d(input) for the input the loss was computed from (logits,
  /// probabilities or embedding, see each function).
  Vector grad;
};

/// -log p_label for an explicit probability vector. Gradient is w.r.t. probs.
LossValue cross_entropy(const Vector& probs, std::size_t label);

/// -log softmax(logits)_label via log-sum-exp. Gradient w.r.t. logits is
/// softmax(logits) - onehot(label).
LossValue cross_entropy_from_logits(const Vector& logits, std::size_t label);

/// Proxy-NCA loss with the normalizer over all classes:
///   -log exp(-d(x, p_label)) / sum_c exp(-d(x, p_c)),  d = squared distance.
/// x and every proxy column must be unit length within 1e-6. Gradient is
/// w.r.t. x.
LossValue nca_proxy_loss(const Vector& x, const Matrix& proxies, std::size_t label);

/// Batched mean softmax cross-entropy. `labels[b]` indexes a row of the
/// C x B logits. Returns the loss and writes d(mean loss)/d(logits).
double softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels,
                             Matrix* d_logits);

double log_sum_exp(const Vector& v);

}  // namespace lowshot
