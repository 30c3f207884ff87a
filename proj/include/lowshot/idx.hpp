#pragma once

#include "lowshot/data.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace lowshot {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image file (u8, rank 3) and its IDX label file (u8, rank 1).
/// Pixels are rescaled to [-1, 1]. Labels form the catalog in ascending order.
/// Throws BadMagic, CountMismatch, TruncatedFile, IoFailure.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                        SplitTag split = SplitTag::train);

/// Writers used by tests and tooling to produce IDX files.
void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

}  // namespace lowshot
