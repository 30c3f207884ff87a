#include "lowshot/cosine_head.hpp"

#include "lowshot/error.hpp"

#include <cmath>
#include <string>

namespace lowshot {
namespace {

void require_unit(const Vector& phi) {
  const double norm = l2_norm(as_span(phi));
  if (std::abs(norm - 1.0) > 1e-9) {
    throw Error(Errc::DegenerateNorm, "embedding norm " + std::to_string(norm) + " is not 1");
  }
}

}  // namespace

CosineHead::CosineHead(Matrix weights, std::vector<ClassId> class_ids, double scale)
    : class_ids_(std::move(class_ids)), imprint_counts_(class_ids_.size(), 0) {
  if (class_ids_.empty()) throw Error(Errc::InvalidShape, "head needs at least one class");
  if (weights.cols() != static_cast<Eigen::Index>(class_ids_.size())) {
    throw Error(Errc::InvalidShape, "weight columns do not match class count");
  }
  if (!(scale > 0.0)) throw Error(Errc::InvalidConfig, "scale must be positive");
  for (std::size_t i = 0; i < class_ids_.size(); ++i)
    for (std::size_t j = i + 1; j < class_ids_.size(); ++j)
      if (class_ids_[i] == class_ids_[j])
        throw Error(Errc::DuplicateClass, "class " + std::to_string(class_ids_[i]) + " listed twice");
  params_.add("weight", std::move(weights), ParamGroup::fresh);
  params_.add("log_scale", Matrix::Constant(1, 1, std::log(scale)), ParamGroup::fresh);
}

CosineHead CosineHead::random(std::size_t dim, std::vector<ClassId> class_ids, std::uint64_t seed, double scale) {
  Matrix w = xavier_uniform(dim, class_ids.size(), seed);
  return CosineHead(std::move(w), std::move(class_ids), scale);
}

double CosineHead::scale() const { return std::exp(log_scale()); }

void CosineHead::set_scale(double s) {
  if (!(s > 0.0)) throw Error(Errc::InvalidConfig, "scale must be positive");
  params_.value("log_scale")(0, 0) = std::log(s);
}

void CosineHead::set_imprint_counts(std::vector<std::uint64_t> counts) {
  if (counts.size() != class_ids_.size()) throw Error(Errc::InvalidShape, "imprint count per class expected");
  imprint_counts_ = std::move(counts);
}

std::optional<std::size_t> CosineHead::column_of(ClassId id) const {
  for (std::size_t i = 0; i < class_ids_.size(); ++i)
    if (class_ids_[i] == id) return i;
  return std::nullopt;
}

Matrix CosineHead::templates() const { return normalize_columns(weights()); }

Vector CosineHead::template_of(std::size_t column) const {
  if (column >= class_count()) throw Error(Errc::IndexOutOfRange, "column " + std::to_string(column));
  return l2_normalize(weights().col(static_cast<Eigen::Index>(column)));
}

Vector CosineHead::cosines(const Vector& phi) const {
  require_unit(phi);
  if (phi.size() != weights().rows()) throw Error(Errc::InvalidShape, "embedding dimension mismatch");
  const Matrix unit = templates();
  Vector out(unit.cols());
  for (Eigen::Index j = 0; j < unit.cols(); ++j) {
    out[j] = dot(std::span<const double>(unit.col(j).data(), static_cast<std::size_t>(unit.rows())), as_span(phi));
  }
  return out;
}

Vector CosineHead::logits(const Vector& phi) const { return scale() * cosines(phi); }

ClassId CosineHead::predict(const Vector& phi) const {
  const Vector c = cosines(phi);
  return class_ids_[argmax_first(as_span(c))];
}

std::vector<ClassId> CosineHead::predict_all(std::span<const Vector> phis) const {
  const Matrix unit = templates();
  const auto rows = static_cast<std::size_t>(unit.rows());
  std::vector<ClassId> out;
  out.reserve(phis.size());
  Vector scores(unit.cols());
  for (const Vector& phi : phis) {
    require_unit(phi);
    if (phi.size() != unit.rows()) throw Error(Errc::InvalidShape, "embedding dimension mismatch");
    for (Eigen::Index j = 0; j < unit.cols(); ++j) scores[j] = dot(std::span<const double>(unit.col(j).data(), rows), as_span(phi));
    out.push_back(class_ids_[argmax_first(as_span(scores))]);
  }
  return out;
}

void CosineHead::append(ClassId id, const Vector& column, std::uint64_t imprint_count) {
  if (has_class(id)) throw Error(Errc::DuplicateClass, "class " + std::to_string(id) + " already in head");
  if (column.size() != weights().rows()) throw Error(Errc::InvalidShape, "column dimension mismatch");
  if (!(l2_norm(as_span(column)) > kNormEpsilon)) throw Error(Errc::DegenerateNorm, "appended column has zero norm");
  const Matrix& w = weights();
  Matrix grown(w.rows(), w.cols() + 1);
  grown.leftCols(w.cols()) = w;
  grown.col(w.cols()) = column;
  params_.assign("weight", std::move(grown), true);
  class_ids_.push_back(id);
  imprint_counts_.push_back(imprint_count);
}

void CosineHead::replace(std::size_t column, const Vector& value, std::uint64_t imprint_count) {
  if (column >= class_count()) throw Error(Errc::IndexOutOfRange, "column " + std::to_string(column));
  if (value.size() != weights().rows()) throw Error(Errc::InvalidShape, "column dimension mismatch");
  params_.value("weight").col(static_cast<Eigen::Index>(column)) = value;
  imprint_counts_[column] = imprint_count;
}

Matrix CosineHead::forward(const Matrix& embeddings, Cache& cache) const {
  if (embeddings.rows() != weights().rows()) throw Error(Errc::InvalidShape, "embedding dimension mismatch");
  cache.unit = normalize_columns(weights(), &cache.norms);
  cache.cosines = cache.unit.transpose() * embeddings;
  cache.scale = scale();
  return cache.scale * cache.cosines;
}

Matrix CosineHead::backward(const Cache& cache, const Matrix& embeddings, const Matrix& d_logits,
                            ParamSet& grads, bool train_scale) const {
  // d log_scale = sum(dL * s * cos) since d s / d log_scale = s.
  if (train_scale) grads.value("log_scale")(0, 0) += cache.scale * (d_logits.array() * cache.cosines.array()).sum();
  const Matrix d_cos = cache.scale * d_logits;
  const Matrix d_unit = embeddings * d_cos.transpose();
  grads.value("weight") += normalize_columns_backward(cache.unit, cache.norms, d_unit);
  return cache.unit * d_cos;
}

Vector softmax(const Vector& logits) {
  if (!logits.allFinite()) throw Error(Errc::NonFiniteLoss, "softmax of non-finite logits");
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::IndexOutOfRange, "argmax of empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

}  // namespace lowshot
