#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thc {

enum class Errc {
    InvalidSimplex,
    DimensionMismatch,
    DomainError,
    EmptyBatch,
    InvalidConfig,
    ShapeMismatch,
    StaleTape,
    EmptyDataset,
    NonFiniteLoss,
    MissingStats,
    InsufficientData,
    IoError,
    BadMagic,
    VersionMismatch,
    InvalidK,
    EmptyInput,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidSimplex: return "InvalidSimplex";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DomainError: return "DomainError";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::StaleTape: return "StaleTape";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::MissingStats: return "MissingStats";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InvalidK: return "InvalidK";
    case Errc::EmptyInput: return "EmptyInput";
    }
    return "Unknown";
}

/// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Raised by training when a loss goes NaN/inf; carries the 1-based epoch.
class NonFiniteLossError : public Error {
public:
    NonFiniteLossError(int epoch, const std::string& what)
        : Error(Errc::NonFiniteLoss, "epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace thc
