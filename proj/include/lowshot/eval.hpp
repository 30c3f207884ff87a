#pragma once

#include "lowshot/data.hpp"
#include "lowshot/model.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace lowshot {

using Classifier = std::function<ClassId(const Vector&)>;

/// Fraction of test rows (optionally only rows whose label is in `filter`)
/// that `classify` labels correctly. Classification itself always runs over
/// every class the classifier knows. Throws EmptyFilteredSet.
double top1_accuracy(const Classifier& classify, const LabeledDataset& test,
                     const std::optional<std::vector<ClassId>>& filter = std::nullopt);

double top1_accuracy(const Model& model, const LabeledDataset& test,
                     const std::optional<std::vector<ClassId>>& filter = std::nullopt);

/// Accuracy for each class label that occurs in `test`.
std::map<ClassId, double> per_class_accuracy(const std::vector<ClassId>& predictions,
                                             const LabeledDataset& test);

/// Fraction of `predictions` equal to the true labels over the rows kept by
/// `filter`. Shared by the functions above and the benchmark.
double accuracy_of(std::span<const ClassId> predictions, const LabeledDataset& test,
                   const std::optional<std::vector<ClassId>>& filter = std::nullopt);

/// Reference embeddings for nearest-neighbor classification.
class EmbeddingStore {
 public:
  /// Stores l2_normalize(embedding), the same normalization the head
  /// applies to its columns.
  void add(const Vector& embedding, ClassId label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::vector<ClassId>& labels() const { return labels_; }

  /// Label of the reference with the largest inner product (smallest
  /// squared distance). Ties go to the earliest insertion. Throws EmptyStore.
  ClassId nn_predict(const Vector& query) const;

 private:
  std::vector<Vector> refs_;
  std::vector<ClassId> labels_;
};

}  // namespace lowshot
