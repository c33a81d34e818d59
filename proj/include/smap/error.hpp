#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smap {

enum class Errc {
  // geometry
  BehindCamera,
  NonPositiveDepth,
  InvalidRotation,
  InvalidIntrinsics,
  // keyframe selection
  InsufficientKeyframes,
  // sparse prior
  NoValidKeypoints,
  EmptyPrior,
  NoOverlap,
  // mvs
  InvalidPrior,
  NoSources,
  // eval
  EmptyMesh,
  EmptySet,
  DegenerateConfiguration,
  // synth
  NoVisibleSurface,
  // pipeline / io
  ParseError,
  MissingFrame,
  IoError,
  ConfigError,
  InvalidArgument,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::InvalidRotation: return "InvalidRotation";
    case Errc::InvalidIntrinsics: return "InvalidIntrinsics";
    case Errc::InsufficientKeyframes: return "InsufficientKeyframes";
    case Errc::NoValidKeypoints: return "NoValidKeypoints";
    case Errc::EmptyPrior: return "EmptyPrior";
    case Errc::NoOverlap: return "NoOverlap";
    case Errc::InvalidPrior: return "InvalidPrior";
    case Errc::NoSources: return "NoSources";
    case Errc::EmptyMesh: return "EmptyMesh";
    case Errc::EmptySet: return "EmptySet";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::NoVisibleSurface: return "NoVisibleSurface";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingFrame: return "MissingFrame";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

/// Usage/config problems exit with 1, data problems with 2.
inline bool is_config_error(Errc code) {
  return code == Errc::ConfigError || code == Errc::InvalidArgument;
}

}  // namespace smap
