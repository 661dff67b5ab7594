// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "depthcal/error_model.hpp"

namespace depthcal {

/// Serialized calibration: bias map + noise model + provenance (JSON text:
/// dataset hash, binning, flags). Binary layout, little-endian:
///   "DCAL" | u32 version | u32 width | u32 height
///   | f64 noise a, b, c, sigma_floor
///   | f64 coefficients (a, b, c per pixel, row-major)
///   | validity bitmap, LSB-first, ceil(w*h / 8) bytes
///   | u32 provenance length | provenance bytes (UTF-8 JSON)
struct CalibrationData {
  static constexpr std::uint32_t kVersion = 1;

  BiasMap bias_map;
  NoiseModel noise;
  std::string provenance;  // JSON text, may be empty
};

void write_calibration_binary(const std::filesystem::path& path,
                              const CalibrationData& data);
CalibrationData read_calibration_binary(const std::filesystem::path& path);

/// Debug-friendly JSON export of the same content.
void write_calibration_json(const std::filesystem::path& path,
                            const CalibrationData& data);
CalibrationData read_calibration_json(const std::filesystem::path& path);

/// Dispatches on the magic bytes / leading '{'.
CalibrationData read_calibration(const std::filesystem::path& path);

/// FNV-1a 64-bit, used for dataset provenance hashes.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace depthcal
