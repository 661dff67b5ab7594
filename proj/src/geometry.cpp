// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/geometry.hpp"

#include <cmath>

#include "depthcal/errors.hpp"

namespace depthcal {

bool PlaneHessian::is_valid(double tol) const {
  return normal.allFinite() && std::isfinite(distance) &&
         std::abs(normal.norm() - 1.0) <= tol && distance >= 0.0;
}

PlaneHessian PlaneHessian::normalized(const Vec3& normal, double distance) {
  const double n = normal.norm();
  if (!(n > 0.0) || !normal.allFinite() || !std::isfinite(distance)) {
    throw InvalidArgumentError("plane normal must be finite and nonzero");
  }
  Vec3 unit = normal / n;
  double d = distance / n;
  if (d < 0.0) {
    unit = -unit;
    d = -d;
  }
  return PlaneHessian{unit, d};
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 err = rotation * rotation.transpose() - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

PlaneHessian transform_plane(const PlaneHessian& plane,
                             const RigidTransform& extrinsics) {
  if (!plane.is_valid()) {
    throw InvalidArgumentError("transform_plane: plane violates Hessian invariants");
  }
  if (!extrinsics.is_valid()) {
    throw InvalidArgumentError("transform_plane: rotation is not orthonormal with det +1");
  }
  // Substituting x = R^T (x' - t) into n.x = d gives (Rn).x' = d + (Rn).t.
  Vec3 n = extrinsics.rotation * plane.normal;
  double d = plane.distance + n.dot(extrinsics.translation);
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  return PlaneHessian{n, d};
}

Vec3 backproject_ray(const CameraIntrinsics& intrinsics, PixelCoord pixel) {
  if (!intrinsics.is_valid()) {
    throw InvalidArgumentError("backproject_ray: invalid intrinsics");
  }
  if (!intrinsics.contains(pixel.u, pixel.v)) {
    throw InvalidArgumentError("backproject_ray: pixel outside image bounds");
  }
  return Vec3{(pixel.u - intrinsics.cx) / intrinsics.fx,
              (pixel.v - intrinsics.cy) / intrinsics.fy, 1.0};
}

ReferenceDepth reference_depth(const PlaneHessian& plane_cam,
                               const Vec3& ray_dir, double grazing_tol) {
  const double den = plane_cam.normal.dot(ray_dir);
  if (std::abs(den) < grazing_tol) {
    return ReferenceDepth{RayPlaneStatus::kGrazingRay, 0.0};
  }
  const double z = plane_cam.distance / den;
  if (z <= 0.0) {
    return ReferenceDepth{RayPlaneStatus::kNegativeDepth, z};
  }
  return ReferenceDepth{RayPlaneStatus::kOk, z};
}

Vec3 backproject_point(const CameraIntrinsics& intrinsics, PixelCoord pixel,
                       double depth) {
  if (!(depth > 0.0)) {
    throw NonPositiveDepthError("backproject_point: depth must be > 0");
  }
  return depth * backproject_ray(intrinsics, pixel);
}

}  // namespace depthcal
