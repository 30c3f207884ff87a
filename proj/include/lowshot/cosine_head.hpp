#pragma once

#include "lowshot/params.hpp"
#include "lowshot/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lowshot {

inline constexpr double kDefaultScale = 10.0;

/// Bias-free classifier over unit templates.
///
/// Columns of the stored weight matrix (D x |C|) are kept raw and normalized
/// inside every forward pass, so gradient flows through the normalization and
/// rescaling a column never changes a score. The shared scale is stored as
/// its logarithm ("log_scale") which keeps it positive under any update.
///
/// Parameters: "weight" (D x C) and "log_scale" (1 x 1).
class CosineHead {
 public:
  CosineHead(Matrix weights, std::vector<ClassId> class_ids, double scale = kDefaultScale);

  /// Head with Xavier-uniform columns for `class_ids`.
  static CosineHead random(std::size_t dim, std::vector<ClassId> class_ids, std::uint64_t seed,
                           double scale = kDefaultScale);

  std::size_t dim() const { return static_cast<std::size_t>(weights().rows()); }
  std::size_t class_count() const { return class_ids_.size(); }
  const std::vector<ClassId>& class_ids() const { return class_ids_; }
  const Matrix& weights() const { return params_.value("weight"); }
  double scale() const;
  double log_scale() const { return params_.value("log_scale")(0, 0); }
  void set_scale(double s);

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  std::optional<std::size_t> column_of(ClassId id) const;
  bool has_class(ClassId id) const { return column_of(id).has_value(); }

  /// Number of embeddings averaged into each column (0 for trained columns).
  const std::vector<std::uint64_t>& imprint_counts() const { return imprint_counts_; }
  void set_imprint_counts(std::vector<std::uint64_t> counts);

  /// Columns normalized to unit length. Throws DegenerateNorm.
  Matrix templates() const;
  Vector template_of(std::size_t column) const;

  /// w_i^T phi for every column (no scale).
  Vector cosines(const Vector& phi) const;

  /// s * w_i^T phi. Requires ||phi|| = 1 within 1e-9.
  Vector logits(const Vector& phi) const;

  /// Label of argmax_i w_i^T phi; ties go to the lowest column.
  ClassId predict(const Vector& phi) const;

  /// predict() for many embeddings, normalizing the templates once.
  std::vector<ClassId> predict_all(std::span<const Vector> phis) const;

  /// Appends a column; throws DuplicateClass if the label exists.
  void append(ClassId id, const Vector& column, std::uint64_t imprint_count);

  /// Overwrites an existing column.
  void replace(std::size_t column, const Vector& value, std::uint64_t imprint_count);

  std::size_t parameter_count() const { return params_.scalar_count(); }

  struct Cache {
    Matrix unit;     // normalized templates
    Vector norms;    // raw column norms
    Matrix cosines;  // C x B
    double scale = 0.0;
  };

  /// Batched logits (C x B) for unit embeddings stored as columns.
  Matrix forward(const Matrix& embeddings, Cache& cache) const;

  /// Given d(loss)/d(logits), accumulates into `grads` ("weight", and
  /// "log_scale" when `train_scale`) and returns d(loss)/d(embeddings).
  Matrix backward(const Cache& cache, const Matrix& embeddings, const Matrix& d_logits,
                  ParamSet& grads, bool train_scale = true) const;

 private:
  ParamSet params_;
  std::vector<ClassId> class_ids_;
  std::vector<std::uint64_t> imprint_counts_;
};

/// Numerically stable softmax: exp(l_i - max l) / sum_j exp(l_j - max l).
Vector softmax(const Vector& logits);

/// Index of the first maximal score.
std::size_t argmax_first(std::span<const double> scores);

}  // namespace lowshot
