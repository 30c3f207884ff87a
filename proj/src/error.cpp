#include "lowshot/error.hpp"

namespace lowshot {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DegenerateNorm: return "DegenerateNorm";
    case Errc::DegenerateMean: return "DegenerateMean";
    case Errc::InvalidShape: return "InvalidShape";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::DuplicateClass: return "DuplicateClass";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::MissingClassColumn: return "MissingClassColumn";
    case Errc::CenterPackingFailure: return "CenterPackingFailure";
    case Errc::BadMagic: return "BadMagic";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::InvalidBaseCount: return "InvalidBaseCount";
    case Errc::InsufficientExamples: return "InsufficientExamples";
    case Errc::UnsupportedModality: return "UnsupportedModality";
    case Errc::EmptyFilteredSet: return "EmptyFilteredSet";
    case Errc::EmptyStore: return "EmptyStore";
    case Errc::UnknownConfig: return "UnknownConfig";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadVersion: return "BadVersion";
    case Errc::CorruptPayload: return "CorruptPayload";
  }
  return "Unknown";
}

}  // namespace lowshot
