#include "lowshot/losses.hpp"

#include "lowshot/cosine_head.hpp"
#include "lowshot/error.hpp"

#include <cmath>
#include <string>

namespace lowshot {
namespace {

void check_label(std::size_t label, Eigen::Index size) {
  if (label >= static_cast<std::size_t>(size)) {
    throw Error(Errc::IndexOutOfRange, "label " + std::to_string(label) + " outside " + std::to_string(size) + " classes");
  }
}

void check_unit(const Vector& v, const char* what) {
  const double norm = l2_norm(as_span(v));
  if (std::abs(norm - 1.0) > 1e-6) throw Error(Errc::DegenerateNorm, std::string(what) + " is not unit length");
}

}  // namespace

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

LossValue cross_entropy(const Vector& probs, std::size_t label) {
  check_label(label, probs.size());
  const double p = probs[static_cast<Eigen::Index>(label)];
  LossValue out;
  out.loss = -std::log(p);
  out.grad = Vector::Zero(probs.size());
  out.grad[static_cast<Eigen::Index>(label)] = -1.0 / p;
  return out;
}

LossValue cross_entropy_from_logits(const Vector& logits, std::size_t label) {
  check_label(label, logits.size());
  if (!logits.allFinite()) throw Error(Errc::NonFiniteLoss, "non-finite logits");
  LossValue out;
  out.loss = log_sum_exp(logits) - logits[static_cast<Eigen::Index>(label)];
  out.grad = softmax(logits);
  out.grad[static_cast<Eigen::Index>(label)] -= 1.0;
  return out;
}

LossValue nca_proxy_loss(const Vector& x, const Matrix& proxies, std::size_t label) {
  check_label(label, proxies.cols());
  if (x.size() != proxies.rows()) throw Error(Errc::InvalidShape, "proxy dimension mismatch");
  check_unit(x, "input");
  for (Eigen::Index c = 0; c < proxies.cols(); ++c) check_unit(proxies.col(c), "proxy");

  // scores_c = -||x - p_c||^2; the loss is a cross-entropy over these scores.
  Vector scores(proxies.cols());
  for (Eigen::Index c = 0; c < proxies.cols(); ++c) scores[c] = -(x - proxies.col(c)).squaredNorm();
  LossValue ce = cross_entropy_from_logits(scores, label);

  // d score_c / dx = -2 (x - p_c)
  LossValue out;
  out.loss = ce.loss;
  out.grad = Vector::Zero(x.size());
  for (Eigen::Index c = 0; c < proxies.cols(); ++c) out.grad += ce.grad[c] * (-2.0) * (x - proxies.col(c));
  return out;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels, Matrix* d_logits) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols()) {
    throw Error(Errc::InvalidShape, "one label per logit column expected");
  }
  if (labels.empty()) throw Error(Errc::EmptyDataset, "empty batch");
  const double inv_batch = 1.0 / static_cast<double>(labels.size());
  double total = 0.0;
  if (d_logits) d_logits->resize(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    LossValue l = cross_entropy_from_logits(logits.col(b), labels[static_cast<std::size_t>(b)]);
    total += l.loss;
    if (d_logits) d_logits->col(b) = l.grad * inv_batch;
  }
  const double loss = total * inv_batch;
  if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "batch loss is not finite");
  return loss;
}

}  // namespace lowshot
