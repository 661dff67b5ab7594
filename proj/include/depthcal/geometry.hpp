// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include "depthcal/types.hpp"

namespace depthcal {

/// Outcome of intersecting a pixel ray with a plane.
enum class RayPlaneStatus {
  kOk,
  kGrazingRay,     // |n . l(1)| below tolerance, ray parallel to the plane
  kNegativeDepth,  // intersection behind the camera
};

struct ReferenceDepth {
  RayPlaneStatus status{RayPlaneStatus::kOk};
  double depth{0.0};  // valid only when status == kOk

  explicit operator bool() const { return status == RayPlaneStatus::kOk; }
};

/// Maps a plane observed in the source frame through x' = R x + t into the
/// target frame: n' = R n, d' = d + n' . t, then sign-normalized so d' >= 0.
PlaneHessian transform_plane(const PlaneHessian& plane,
                             const RigidTransform& extrinsics);

/// Ray direction l(1) = ((u - cx)/fx, (v - cy)/fy, 1) of a pixel; the full
/// ray is z * l(1). Third component is exactly 1.
Vec3 backproject_ray(const CameraIntrinsics& intrinsics, PixelCoord pixel);

/// Depth z* at which the pixel ray meets the plane (both in the camera
/// frame): z* = d' / (n' . l(1)).
ReferenceDepth reference_depth(const PlaneHessian& plane_cam,
                               const Vec3& ray_dir,
                               double grazing_tol = 1e-9);

/// Reconstructed 3D point depth * l(1). Throws NonPositiveDepthError.
Vec3 backproject_point(const CameraIntrinsics& intrinsics, PixelCoord pixel,
                       double depth);

}  // namespace depthcal
