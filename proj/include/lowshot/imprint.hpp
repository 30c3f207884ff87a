#pragma once

#include "lowshot/data.hpp"
#include "lowshot/model.hpp"

#include <cstdint>
#include <span>

namespace lowshot {

/// Unit mean direction of a set of unit embeddings. Throws DegenerateMean
/// when the mean's norm is at or below kNormEpsilon.
Vector average_template(std::span<const Vector> embeddings);

/// Returns a copy of `model` whose head gains the column embed(example) for
/// `label`. Existing columns and the scale are untouched.
/// Throws DuplicateClass, DegenerateNorm.
Model imprint_single(const Model& model, const Vector& example, ClassId label);

/// New column = normalize(mean of embed(x) over the support set).
/// With one example the result equals imprint_single bitwise.
Model imprint_average(const Model& model, const SupportSet& support);

/// Imprints each support set in order.
Model imprint_all(const Model& model, std::span<const SupportSet> supports);

/// Averages over each original plus `copies` augmented versions of it.
/// Augmentation seeds are derived from (`seed`, example index, copy index).
Model imprint_augmented(const Model& model, const SupportSet& support, const AugmentParams& augment,
                        std::size_t copies, std::uint64_t seed);

/// Re-imprints an existing class: the current unit template counts as
/// `imprint_count` embeddings (at least one) and is averaged with the new
/// ones, then renormalized. Throws MissingClassColumn if the label is absent.
Model imprint_update(const Model& model, const SupportSet& support);

/// Appends Xavier-uniform columns for `labels` (the untrained baseline).
Model add_random_columns(const Model& model, std::span<const ClassId> labels, std::uint64_t seed);

}  // namespace lowshot
