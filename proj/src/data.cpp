#include "lowshot/data.hpp"

#include "lowshot/error.hpp"
#include "lowshot/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lowshot {

std::vector<std::size_t> LabeledDataset::indices_of(ClassId id) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == id) rows.push_back(i);
  return rows;
}

LabeledDataset LabeledDataset::filter_classes(std::span<const ClassId> keep) const {
  auto kept = [&](ClassId id) { return std::find(keep.begin(), keep.end(), id) != keep.end(); };
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (kept(labels[i])) rows.push_back(i);
  LabeledDataset out;
  out.split = split;
  out.image_shape = image_shape;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(rows[k]));
    out.labels.push_back(labels[rows[k]]);
  }
  for (ClassId id : catalog)
    if (kept(id)) out.catalog.push_back(id);
  return out;
}

void LabeledDataset::validate() const {
  if (inputs.cols() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(Errc::InvalidShape, "example and label counts differ");
  }
  for (ClassId id : labels)
    if (std::find(catalog.begin(), catalog.end(), id) == catalog.end())
      throw Error(Errc::InvalidShape, "label " + std::to_string(id) + " not in catalog");
  if (image_shape && image_shape->size() != input_dim()) throw Error(Errc::InvalidShape, "image shape mismatch");
}

DatasetPair gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw Error(Errc::InvalidConfig, "synthetic data needs >= 2 classes");
  if (spec.input_dim < 2) throw Error(Errc::InvalidConfig, "synthetic input_dim must be >= 2");
  if (!(spec.noise_sigma >= 0.0)) throw Error(Errc::InvalidConfig, "noise_sigma must be >= 0");

  constexpr std::size_t kAttemptsPerCenter = 10000;
  const double max_cos = std::cos(spec.min_angle_deg * std::numbers::pi / 180.0);
  const auto dim = static_cast<Eigen::Index>(spec.input_dim);
  CounterRng center_rng(derive_seed(spec.seed, {0xC3}));
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kAttemptsPerCenter && !placed; ++attempt) {
      Vector v(dim);
      for (Eigen::Index i = 0; i < dim; ++i) v[i] = center_rng.normal();
      const double norm = v.norm();
      if (norm <= kNormEpsilon) continue;
      v /= norm;
      placed = std::all_of(centers.begin(), centers.end(), [&](const Vector& u) { return u.dot(v) <= max_cos; });
      if (placed) centers.push_back(std::move(v));
    }
    if (!placed) {
      throw Error(Errc::CenterPackingFailure, "could not place center " + std::to_string(c) + " at >= " +
                                                  std::to_string(spec.min_angle_deg) + " degrees");
    }
  }

  auto draw = [&](std::size_t per_class, SplitTag split, std::uint64_t tag) {
    LabeledDataset d;
    d.split = split;
    d.inputs.resize(dim, static_cast<Eigen::Index>(per_class * spec.num_classes));
    CounterRng rng(derive_seed(spec.seed, {tag}));
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      d.catalog.push_back(static_cast<ClassId>(c));
      for (std::size_t k = 0; k < per_class; ++k, ++col) {
        for (Eigen::Index i = 0; i < dim; ++i) d.inputs(i, col) = centers[c][i] + spec.noise_sigma * rng.normal();
        d.labels.push_back(static_cast<ClassId>(c));
      }
    }
    return d;
  };
  return DatasetPair{draw(spec.per_class_train, SplitTag::train, 0x7A),
                     draw(spec.per_class_test, SplitTag::test, 0x7E)};
}

BaseNovelSplit split_base_novel(const LabeledDataset& dataset, std::size_t base_count) {
  if (base_count < 1 || base_count >= dataset.catalog.size()) {
    throw Error(Errc::InvalidBaseCount, "base count " + std::to_string(base_count) + " must be in [1, " +
                                            std::to_string(dataset.catalog.size()) + ")");
  }
  BaseNovelSplit s;
  s.base.assign(dataset.catalog.begin(), dataset.catalog.begin() + static_cast<std::ptrdiff_t>(base_count));
  s.novel.assign(dataset.catalog.begin() + static_cast<std::ptrdiff_t>(base_count), dataset.catalog.end());
  return s;
}

std::vector<SupportSet> sample_support(const LabeledDataset& train, std::span<const ClassId> classes,
                                       std::size_t n, std::uint64_t seed) {
  if (train.split != SplitTag::train) throw Error(Errc::InvalidConfig, "support sets come from the train split only");
  if (n == 0) throw Error(Errc::InvalidConfig, "shots must be >= 1");
  std::vector<SupportSet> out;
  for (ClassId id : classes) {
    std::vector<std::size_t> rows = train.indices_of(id);
    if (rows.size() < n) {
      throw Error(Errc::InsufficientExamples, "class " + std::to_string(id) + " has " + std::to_string(rows.size()) +
                                                  " training examples, " + std::to_string(n) + " requested");
    }
    // Partial Fisher-Yates; each class has its own stream.
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(id)}));
    for (std::size_t i = 0; i < n; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
    SupportSet s;
    s.label = id;
    for (std::size_t i = 0; i < n; ++i) {
      s.source_rows.push_back(rows[i]);
      s.examples.push_back(train.example(rows[i]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view augment_name(AugmentKind k) noexcept {
  switch (k) {
    case AugmentKind::identity: return "identity";
    case AugmentKind::jitter: return "jitter";
    case AugmentKind::flip: return "flip";
    case AugmentKind::crop: return "crop";
    case AugmentKind::flip_crop: return "flip_crop";
  }
  return "identity";
}

AugmentKind parse_augment(std::string_view name) {
  for (AugmentKind k : {AugmentKind::identity, AugmentKind::jitter, AugmentKind::flip, AugmentKind::crop,
                        AugmentKind::flip_crop})
    if (augment_name(k) == name) return k;
  throw Error(Errc::InvalidConfig, "unknown augmentation '" + std::string(name) + "'");
}

CropWindow random_crop_window(const ImageShape& shape, double crop_fraction, std::uint64_t seed) {
  if (shape.rows == 0 || shape.cols == 0) throw Error(Errc::InvalidShape, "empty image");
  if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) throw Error(Errc::InvalidConfig, "crop_fraction must be in (0, 1]");
  auto side = [&](std::size_t full) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(crop_fraction * static_cast<double>(full))), 1, full);
  };
  CropWindow w;
  w.rows = side(shape.rows);
  w.cols = side(shape.cols);
  CounterRng rng(seed);
  w.top = rng.below(shape.rows - w.rows + 1);
  w.left = rng.below(shape.cols - w.cols + 1);
  return w;
}

Vector flip_horizontal(const Vector& image, const ImageShape& shape) {
  if (static_cast<std::size_t>(image.size()) != shape.size()) throw Error(Errc::InvalidShape, "image shape mismatch");
  Vector out(image.size());
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c)
      out[static_cast<Eigen::Index>(r * shape.cols + c)] = image[static_cast<Eigen::Index>(r * shape.cols + (shape.cols - 1 - c))];
  return out;
}

Vector crop_resize(const Vector& image, const ImageShape& shape, const CropWindow& w) {
  if (static_cast<std::size_t>(image.size()) != shape.size()) throw Error(Errc::InvalidShape, "image shape mismatch");
  if (w.rows == 0 || w.cols == 0 || w.top + w.rows > shape.rows || w.left + w.cols > shape.cols) {
    throw Error(Errc::InvalidShape, "crop window outside the image");
  }
  auto at = [&](std::size_t r, std::size_t c) { return image[static_cast<Eigen::Index>(r * shape.cols + c)]; };
  // Maps output pixel centers onto the window and interpolates bilinearly.
  auto source = [](std::size_t i, std::size_t out_size, std::size_t start, std::size_t win) {
    const double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(win) / static_cast<double>(out_size) - 0.5;
    return std::clamp(pos, 0.0, static_cast<double>(win - 1)) + static_cast<double>(start);
  };
  Vector out(image.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    const double y = source(r, shape.rows, w.top, w.rows);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, w.top + w.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const double x = source(c, shape.cols, w.left, w.cols);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, w.left + w.cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = (1.0 - fx) * at(y0, x0) + fx * at(y0, x1);
      const double bottom = (1.0 - fx) * at(y1, x0) + fx * at(y1, x1);
      out[static_cast<Eigen::Index>(r * shape.cols + c)] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Vector augment(const Vector& example, const AugmentParams& params, std::uint64_t seed) {
  const bool needs_image = params.kind == AugmentKind::flip || params.kind == AugmentKind::crop ||
                           params.kind == AugmentKind::flip_crop;
  if (needs_image && !params.image_shape) {
    throw Error(Errc::UnsupportedModality, std::string(augment_name(params.kind)) + " needs image inputs");
  }
  switch (params.kind) {
    case AugmentKind::identity:
      return example;
    case AugmentKind::jitter: {
      CounterRng rng(seed);
      Vector out = example;
      if (params.jitter_sigma == 0.0) return out;
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += params.jitter_sigma * rng.normal();
      return out;
    }
    case AugmentKind::flip:
      return flip_horizontal(example, *params.image_shape);
    case AugmentKind::crop:
      return crop_resize(example, *params.image_shape, random_crop_window(*params.image_shape, params.crop_fraction, seed));
    case AugmentKind::flip_crop: {
      CounterRng rng(seed);
      const bool flip = rng.uniform() < 0.5;
      const Vector base = flip ? flip_horizontal(example, *params.image_shape) : example;
      return crop_resize(base, *params.image_shape,
                         random_crop_window(*params.image_shape, params.crop_fraction, rng.next_u64()));
    }
  }
  return example;
}

}  // namespace lowshot
