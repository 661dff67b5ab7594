// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <vector>

#include "depthcal/types.hpp"

namespace depthcal {

/// Rectangular raster of metric depths, row-major. Missing returns are the
/// sentinel value 0. Every non-sentinel depth is finite and positive.
struct DepthFrame {
  static constexpr double kInvalidDepth = 0.0;

  int width{0};
  int height{0};
  std::vector<double> depths;  // meters, size width * height

  DepthFrame() = default;
  DepthFrame(int w, int h)
      : width(w), height(h),
        depths(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
               kInvalidDepth) {}

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(u);
  }
  double at(int u, int v) const { return depths[index(u, v)]; }
  void set(int u, int v, double z) { depths[index(u, v)] = z; }
  bool has_depth(int u, int v) const { return at(u, v) > 0.0; }
  std::size_t pixel_count() const { return depths.size(); }
};

/// Quadratic bias mean of one pixel: mu(z) = a z^2 + b z + c.
struct PixelBias {
  double a{0.0};  // 1/meters
  double b{0.0};  // unitless
  double c{0.0};  // meters
};

/// mu(z) = a z^2 + b z + c
double bias_mean(const PixelBias& bias, double z);

/// Per-pixel quadratic bias coefficients plus a validity flag. Pixels the
/// calibration could not constrain carry the zero bias and valid == 0.
struct BiasMap {
  int width{0};
  int height{0};
  std::vector<PixelBias> coefficients;  // row-major, size width * height
  std::vector<std::uint8_t> valid;      // 1 = fitted, 0 = fallback zero bias

  BiasMap() = default;
  BiasMap(int w, int h)
      : width(w), height(h),
        coefficients(static_cast<std::size_t>(w) * h),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width + static_cast<std::size_t>(u);
  }
  const PixelBias& at(int u, int v) const { return coefficients[index(u, v)]; }
  std::int64_t valid_count() const;
};

/// Global (pixel-independent) noise model sigma(z) = a z^2 + b z + c,
/// clamped below by sigma_floor.
struct NoiseModel {
  double a{0.0};
  double b{0.0};
  double c{0.0};
  double sigma_floor{1e-4};  // meters
};

/// max(a z^2 + b z + c, sigma_floor)
double noise_sigma(const NoiseModel& model, double z);

/// Subtracts the per-pixel bias mean: z_bar = z - mu_uv(z). Sentinels stay
/// sentinel; compensated values <= 0 are invalidated. Throws
/// DimensionMismatchError when frame and map dimensions differ.
DepthFrame compensate_frame(const DepthFrame& frame, const BiasMap& bias_map);

}  // namespace depthcal
