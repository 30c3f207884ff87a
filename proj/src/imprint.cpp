#include "lowshot/imprint.hpp"

#include "lowshot/error.hpp"
#include "lowshot/random.hpp"

#include <string>

namespace lowshot {
namespace {

std::vector<Vector> embed_support(const Model& model, const SupportSet& support) {
  if (support.examples.empty()) {
    throw Error(Errc::InsufficientExamples, "support set for class " + std::to_string(support.label) + " is empty");
  }
  return model.embedder.embed_batch(support.examples);
}

}  // namespace

Vector average_template(std::span<const Vector> embeddings) {
  if (embeddings.empty()) throw Error(Errc::InsufficientExamples, "nothing to average");
  // A single unit embedding is its own mean direction; returning it as is
  // keeps one-shot averaging identical to single imprinting.
  if (embeddings.size() == 1) return embeddings.front();
  Vector sum = Vector::Zero(embeddings.front().size());
  for (const Vector& e : embeddings) sum += e;
  const Vector mean = sum / static_cast<double>(embeddings.size());
  const double norm = l2_norm(as_span(mean));
  if (!(norm > kNormEpsilon)) {
    throw Error(Errc::DegenerateMean, "mean embedding norm " + std::to_string(norm) + " <= 1e-12");
  }
  return l2_normalize(mean);
}

Model imprint_single(const Model& model, const Vector& example, ClassId label) {
  if (model.head.has_class(label)) throw Error(Errc::DuplicateClass, "class " + std::to_string(label) + " already in head");
  Model out = model;
  out.head.append(label, model.embed(example), 1);
  return out;
}

Model imprint_average(const Model& model, const SupportSet& support) {
  if (model.head.has_class(support.label)) {
    throw Error(Errc::DuplicateClass, "class " + std::to_string(support.label) + " already in head");
  }
  const auto embeddings = embed_support(model, support);
  Model out = model;
  out.head.append(support.label, average_template(embeddings), embeddings.size());
  return out;
}

Model imprint_all(const Model& model, std::span<const SupportSet> supports) {
  Model out = model;
  for (const SupportSet& s : supports) {
    if (out.head.has_class(s.label)) throw Error(Errc::DuplicateClass, "class " + std::to_string(s.label) + " already in head");
    const auto embeddings = embed_support(out, s);
    out.head.append(s.label, average_template(embeddings), embeddings.size());
  }
  return out;
}

Model imprint_augmented(const Model& model, const SupportSet& support, const AugmentParams& augment_params,
                        std::size_t copies, std::uint64_t seed) {
  if (model.head.has_class(support.label)) {
    throw Error(Errc::DuplicateClass, "class " + std::to_string(support.label) + " already in head");
  }
  if (support.examples.empty()) throw Error(Errc::InsufficientExamples, "empty support set");
  std::vector<Vector> embeddings;
  embeddings.reserve(support.examples.size() * (copies + 1));
  for (std::size_t i = 0; i < support.examples.size(); ++i) {
    const Vector& x = support.examples[i];
    embeddings.push_back(model.embed(x));
    for (std::size_t k = 0; k < copies; ++k) {
      embeddings.push_back(model.embed(augment(x, augment_params, derive_seed(seed, {i, k}))));
    }
  }
  Model out = model;
  out.head.append(support.label, average_template(embeddings), embeddings.size());
  return out;
}

Model imprint_update(const Model& model, const SupportSet& support) {
  const auto column = model.head.column_of(support.label);
  if (!column) throw Error(Errc::MissingClassColumn, "class " + std::to_string(support.label) + " has no column");
  const auto embeddings = embed_support(model, support);
  const std::uint64_t prior = std::max<std::uint64_t>(1, model.head.imprint_counts()[*column]);
  Vector sum = static_cast<double>(prior) * model.head.template_of(*column);
  for (const Vector& e : embeddings) sum += e;
  const std::uint64_t total = prior + embeddings.size();
  const Vector mean = sum / static_cast<double>(total);
  if (!(l2_norm(as_span(mean)) > kNormEpsilon)) throw Error(Errc::DegenerateMean, "updated mean has zero norm");
  Model out = model;
  out.head.replace(*column, l2_normalize(mean), total);
  return out;
}

Model add_random_columns(const Model& model, std::span<const ClassId> labels, std::uint64_t seed) {
  if (labels.empty()) return model;
  const Matrix w = xavier_uniform(model.head.dim(), labels.size(), seed);
  Model out = model;
  for (std::size_t i = 0; i < labels.size(); ++i) out.head.append(labels[i], w.col(static_cast<Eigen::Index>(i)), 0);
  return out;
}

}  // namespace lowshot
