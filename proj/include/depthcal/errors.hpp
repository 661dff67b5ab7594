// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace depthcal {

/// Base class for all library errors. Carries a short machine-parsable name
/// ("DimensionMismatch", "TooFewDistances", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define DEPTHCAL_DEFINE_ERROR(ClassName, ErrorName)              \
  class ClassName : public Error {                               \
   public:                                                       \
    explicit ClassName(const std::string& message)               \
        : Error(ErrorName, message) {}                           \
  }

DEPTHCAL_DEFINE_ERROR(DimensionMismatchError, "DimensionMismatch");
DEPTHCAL_DEFINE_ERROR(NonPositiveDepthError, "NonPositiveDepth");
DEPTHCAL_DEFINE_ERROR(TooFewDistancesError, "TooFewDistances");
DEPTHCAL_DEFINE_ERROR(DegenerateSystemError, "DegenerateSystem");
DEPTHCAL_DEFINE_ERROR(DegenerateCloudError, "DegenerateCloud");
DEPTHCAL_DEFINE_ERROR(EmptyCloudError, "EmptyCloud");
DEPTHCAL_DEFINE_ERROR(WallBehindCameraError, "WallBehindCamera");
DEPTHCAL_DEFINE_ERROR(UnsupportedFormatError, "UnsupportedFormat");
DEPTHCAL_DEFINE_ERROR(CorruptFileError, "CorruptFile");
DEPTHCAL_DEFINE_ERROR(NoLineError, "NoLine");
DEPTHCAL_DEFINE_ERROR(IoError, "Io");
DEPTHCAL_DEFINE_ERROR(ConfigError, "Config");
DEPTHCAL_DEFINE_ERROR(InvalidArgumentError, "InvalidArgument");

#undef DEPTHCAL_DEFINE_ERROR

}  // namespace depthcal
