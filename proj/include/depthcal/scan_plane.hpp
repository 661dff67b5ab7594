// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "depthcal/types.hpp"

namespace depthcal {

/// One revolution (or sector) of a 2D radial laser scanner. Ranges <= 0 or
/// non-finite mark missing returns. Point i sits at angle
/// angle_min + i * angle_increment in the scanner's x-y plane.
struct LaserScan2D {
  double angle_min{0.0};        // radians
  double angle_increment{0.0};  // radians, nonzero
  std::vector<double> ranges;   // meters

  bool is_valid() const {
    return ranges.size() >= 2 && angle_increment != 0.0;
  }
};

struct RansacParams {
  int iterations{200};
  double inlier_threshold{0.02};  // meters
  int min_inliers{30};
  std::uint64_t seed{0};
};

/// RANSAC line in the scan plane refined by total least squares on the
/// inliers, lifted to the 3D plane that contains the line and is parallel
/// to the scanner's vertical axis (vertical-wall assumption). Returns
/// nullopt when no line reaches min_inliers.
std::optional<PlaneHessian> extract_plane_from_scan(
    const LaserScan2D& scan, const RansacParams& params = {});

}  // namespace depthcal
