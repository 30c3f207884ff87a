#pragma once

#include "lowshot/model.hpp"
#include "lowshot/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace lowshot {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<OptimState> optim;
};

/// Canonical byte encoding; see docs/checkpoint-format.md.
std::vector<std::uint8_t> encode_checkpoint(const Model& model, const std::optional<OptimState>& optim);

/// Throws BadMagic, BadVersion, CorruptPayload.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Throws IoFailure when the file cannot be written.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::optional<OptimState>& optim = std::nullopt);

/// Throws IoFailure, BadMagic, BadVersion, CorruptPayload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lowshot
