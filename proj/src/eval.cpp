#include "lowshot/eval.hpp"

#include "lowshot/error.hpp"

#include <algorithm>

namespace lowshot {

double accuracy_of(std::span<const ClassId> predictions, const LabeledDataset& test,
                   const std::optional<std::vector<ClassId>>& filter) {
  if (predictions.size() != test.size()) throw Error(Errc::InvalidShape, "one prediction per test row expected");
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (filter && std::find(filter->begin(), filter->end(), test.labels[i]) == filter->end()) continue;
    ++total;
    if (predictions[i] == test.labels[i]) ++correct;
  }
  if (total == 0) throw Error(Errc::EmptyFilteredSet, "no test rows left after filtering");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double top1_accuracy(const Classifier& classify, const LabeledDataset& test,
                     const std::optional<std::vector<ClassId>>& filter) {
  std::vector<ClassId> predictions(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (filter && std::find(filter->begin(), filter->end(), test.labels[i]) == filter->end()) continue;
    predictions[i] = classify(test.example(i));
  }
  return accuracy_of(predictions, test, filter);
}

double top1_accuracy(const Model& model, const LabeledDataset& test, const std::optional<std::vector<ClassId>>& filter) {
  return top1_accuracy([&](const Vector& x) { return model.predict(x); }, test, filter);
}

std::map<ClassId, double> per_class_accuracy(const std::vector<ClassId>& predictions, const LabeledDataset& test) {
  if (predictions.size() != test.size()) throw Error(Errc::InvalidShape, "one prediction per test row expected");
  std::map<ClassId, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& [correct, total] = counts[test.labels[i]];
    ++total;
    if (predictions[i] == test.labels[i]) ++correct;
  }
  std::map<ClassId, double> out;
  for (const auto& [id, c] : counts) out[id] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

void EmbeddingStore::add(const Vector& embedding, ClassId label) {
  if (!refs_.empty() && embedding.size() != refs_.front().size()) {
    throw Error(Errc::InvalidShape, "reference dimension mismatch");
  }
  refs_.push_back(l2_normalize(embedding));
  labels_.push_back(label);
}

ClassId EmbeddingStore::nn_predict(const Vector& query) const {
  if (refs_.empty()) throw Error(Errc::EmptyStore, "nearest neighbor over an empty store");
  if (query.size() != refs_.front().size()) throw Error(Errc::InvalidShape, "query dimension mismatch");
  std::size_t best = 0;
  double best_score = dot(refs_[0], query);
  for (std::size_t i = 1; i < refs_.size(); ++i) {
    const double s = dot(refs_[i], query);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return labels_[best];
}

}  // namespace lowshot
