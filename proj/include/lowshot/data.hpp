#pragma once

#include "lowshot/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace lowshot {

enum class SplitTag { train, test };

struct ImageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Examples are the columns of `inputs`. Images are stored row-major per
/// column and carry their shape; plain vectors have no shape.
struct LabeledDataset {
  Matrix inputs;
  std::vector<ClassId> labels;
  /// Class ids in catalog order.
  std::vector<ClassId> catalog;
  SplitTag split = SplitTag::train;
  std::optional<ImageShape> image_shape;

  std::size_t size() const { return labels.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs.rows()); }
  Vector example(std::size_t i) const { return inputs.col(static_cast<Eigen::Index>(i)); }

  /// Rows whose label is `id`, in dataset order.
  std::vector<std::size_t> indices_of(ClassId id) const;

  /// Subset restricted to the given classes (catalog order preserved).
  LabeledDataset filter_classes(std::span<const ClassId> keep) const;

  /// Throws InvalidShape on size mismatch or a label outside the catalog.
  void validate() const;
};

struct SyntheticSpec {
  std::size_t num_classes = 200;
  std::size_t per_class_train = 20;
  std::size_t per_class_test = 10;
  std::size_t input_dim = 128;
  double noise_sigma = 0.1;
  double min_angle_deg = 15.0;
  std::uint64_t seed = 0;
};

struct DatasetPair {
  LabeledDataset train;
  LabeledDataset test;
};

/// Class centers uniform on the unit sphere, rejected until every pair is at
/// least `min_angle_deg` apart; examples are center + N(0, sigma^2 I).
/// Class ids are 0..num_classes-1. Throws CenterPackingFailure.
DatasetPair gen_synthetic(const SyntheticSpec& spec);

struct BaseNovelSplit {
  std::vector<ClassId> base;
  std::vector<ClassId> novel;
};

/// First `base_count` catalog classes are base, the rest novel.
BaseNovelSplit split_base_novel(const LabeledDataset& dataset, std::size_t base_count);

/// The n exemplars of one novel class.
struct SupportSet {
  ClassId label = 0;
  std::vector<Vector> examples;
  /// Row of each example in the source training split.
  std::vector<std::size_t> source_rows;
};

/// Exactly n training rows per class, without replacement. Throws
/// InsufficientExamples naming the class, or InvalidConfig for a test split.
std::vector<SupportSet> sample_support(const LabeledDataset& train, std::span<const ClassId> classes,
                                       std::size_t n, std::uint64_t seed);

enum class AugmentKind { identity, jitter, flip, crop, flip_crop };

std::string_view augment_name(AugmentKind k) noexcept;
AugmentKind parse_augment(std::string_view name);

struct AugmentParams {
  AugmentKind kind = AugmentKind::identity;
  double jitter_sigma = 0.05;
  /// Crop window side as a fraction of the image side (crop then resize back).
  double crop_fraction = 0.875;
  std::optional<ImageShape> image_shape;
};

struct CropWindow {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

CropWindow random_crop_window(const ImageShape& shape, double crop_fraction, std::uint64_t seed);

/// Augmented copy of `example`, deterministic in `seed`. Flip and crop need
/// an image shape, otherwise UnsupportedModality.
Vector augment(const Vector& example, const AugmentParams& params, std::uint64_t seed);

Vector flip_horizontal(const Vector& image, const ImageShape& shape);

/// Bilinear resample of a window back to the full image size.
Vector crop_resize(const Vector& image, const ImageShape& shape, const CropWindow& window);

/// Maps 8-bit intensities to [-1, 1].
inline double scale_intensity(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

}  // namespace lowshot
