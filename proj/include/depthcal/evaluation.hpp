// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "depthcal/error_model.hpp"
#include "depthcal/types.hpp"

namespace depthcal {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::int32_t> pixel_indices;  // optional source pixels

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Total-least-squares plane: normal = smallest-eigenvalue direction of the
/// centered scatter matrix, d = normal . centroid, sign-normalized to d >= 0.
/// Throws DegenerateCloudError for fewer than 3 points or (near-)collinear
/// clouds.
PlaneHessian fit_plane_tls(const PointCloud& cloud);

/// RMS perpendicular distance sqrt(mean (n.x_i - d)^2).
/// Throws EmptyCloudError.
double rms_perpendicular(const PointCloud& cloud, const PlaneHessian& plane);

/// Mean signed perpendicular distance mean(n.x_i - d).
double mean_signed_perpendicular(const PointCloud& cloud,
                                 const PlaneHessian& plane);

/// Wall-membership mask: pixels whose raw depth agrees with the reference
/// plane within `threshold` meters (|z - z*| < threshold). Pixels without a
/// return, with grazing rays, or behind the plane are excluded.
std::vector<std::uint8_t> reference_inlier_mask(const DepthFrame& frame,
                                                const PlaneHessian& plane_cam,
                                                const CameraIntrinsics& intrinsics,
                                                double threshold = 0.2);

/// Back-projects the masked valid pixels of a frame.
PointCloud backproject_masked(const DepthFrame& frame,
                              const CameraIntrinsics& intrinsics,
                              std::span<const std::uint8_t> mask);

struct EvalRecord {
  double nominal_distance{0.0};
  double rms_raw{0.0};
  double rms_calibrated{0.0};
  std::int64_t point_count{0};
};

/// Local distortion of one frame pair: fit a TLS plane to each cloud (raw
/// and calibrated separately) and report the RMS perpendicular error against
/// its own plane. Nominal distance is the raw cloud's fitted-plane d.
EvalRecord evaluate_local_frame(const DepthFrame& raw,
                                const DepthFrame& calibrated,
                                const CameraIntrinsics& intrinsics,
                                std::span<const std::uint8_t> mask);

/// Global error of one frame pair: RMS perpendicular error against the given
/// reference plane (camera frame), no fitting. Nominal distance is the
/// reference plane's d.
EvalRecord evaluate_global_frame(const DepthFrame& raw,
                                 const DepthFrame& calibrated,
                                 const PlaneHessian& reference_cam,
                                 const CameraIntrinsics& intrinsics,
                                 std::span<const std::uint8_t> mask);

std::vector<EvalRecord> evaluate_local(
    std::span<const DepthFrame> raw, std::span<const DepthFrame> calibrated,
    const CameraIntrinsics& intrinsics,
    std::span<const std::vector<std::uint8_t>> masks);

std::vector<EvalRecord> evaluate_global(
    std::span<const DepthFrame> raw, std::span<const DepthFrame> calibrated,
    std::span<const PlaneHessian> reference_cam,
    const CameraIntrinsics& intrinsics,
    std::span<const std::vector<std::uint8_t>> masks);

/// Aggregation of per-frame records into distance buckets (default 0.25 m,
/// centered on multiples of the width). RMS values pool as
/// sqrt(sum n_i rms_i^2 / sum n_i).
struct EvalBucket {
  double distance{0.0};
  double rms_raw{0.0};
  double rms_calibrated{0.0};
  std::int64_t point_count{0};
};

std::vector<EvalBucket> bucket_records(std::span<const EvalRecord> records,
                                       double bucket_width = 0.25);

/// CSV rows `distance_m,rms_raw_m,rms_calibrated_m,n_points`.
void write_eval_csv(const std::filesystem::path& path,
                    std::span<const EvalBucket> buckets);

}  // namespace depthcal
