#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowshot {

/// Failure categories. Names are stable and surface verbatim in CLI output.
enum class Errc {
  DegenerateNorm,
  DegenerateMean,
  InvalidShape,
  NonFiniteLoss,
  NonFiniteGradient,
  DuplicateClass,
  IndexOutOfRange,
  EmptyDataset,
  MissingClassColumn,
  CenterPackingFailure,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  InvalidBaseCount,
  InsufficientExamples,
  UnsupportedModality,
  EmptyFilteredSet,
  EmptyStore,
  UnknownConfig,
  InvalidConfig,
  IoFailure,
  BadVersion,
  CorruptPayload,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the category prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace lowshot
