// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <filesystem>

#include "depthcal/error_model.hpp"

namespace depthcal {

/// Reads a 16-bit single-channel binary PGM (P5, maxval 65535) encoding
/// depth in millimeters, 0 = no return. Dimensions come from the header.
/// Throws UnsupportedFormatError / CorruptFileError.
DepthFrame read_depth_frame(const std::filesystem::path& path);

/// Writes the millimeter-quantized frame as 16-bit PGM (atomic
/// write-then-rename). Depths round to the nearest millimeter and clamp to
/// the uint16 range; invalid pixels store 0.
void write_depth_frame(const std::filesystem::path& path,
                       const DepthFrame& frame);

}  // namespace depthcal
