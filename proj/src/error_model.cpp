// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/error_model.hpp"

#include <algorithm>
#include <numeric>

#include "depthcal/errors.hpp"

namespace depthcal {

double bias_mean(const PixelBias& bias, double z) {
  return (bias.a * z + bias.b) * z + bias.c;
}

double noise_sigma(const NoiseModel& model, double z) {
  return std::max((model.a * z + model.b) * z + model.c, model.sigma_floor);
}

std::int64_t BiasMap::valid_count() const {
  return std::accumulate(valid.begin(), valid.end(), std::int64_t{0});
}

DepthFrame compensate_frame(const DepthFrame& frame, const BiasMap& bias_map) {
  if (frame.width != bias_map.width || frame.height != bias_map.height) {
    throw DimensionMismatchError("compensate_frame: frame is " +
                                 std::to_string(frame.width) + "x" +
                                 std::to_string(frame.height) + ", bias map is " +
                                 std::to_string(bias_map.width) + "x" +
                                 std::to_string(bias_map.height));
  }
  DepthFrame out(frame.width, frame.height);
  for (std::size_t i = 0; i < frame.depths.size(); ++i) {
    const double z = frame.depths[i];
    if (z <= 0.0) continue;  // sentinel stays sentinel
    const double compensated = z - bias_mean(bias_map.coefficients[i], z);
    out.depths[i] = compensated > 0.0 ? compensated : DepthFrame::kInvalidDepth;
  }
  return out;
}

}  // namespace depthcal
