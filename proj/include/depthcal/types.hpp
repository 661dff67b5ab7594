// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <Eigen/Dense>

namespace depthcal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Plane in Hessian normal form: n . x = d with unit normal and d >= 0.
struct PlaneHessian {
  Vec3 normal{0.0, 0.0, 1.0};
  double distance{0.0};  // meters, perpendicular distance to the origin

  /// Unit-norm and sign checks, tolerance 1e-9 on the norm.
  bool is_valid(double tol = 1e-9) const;

  /// Builds a valid plane from possibly unnormalized inputs: rescales the
  /// normal to unit length and flips the sign pair so that d >= 0.
  static PlaneHessian normalized(const Vec3& normal, double distance);

  /// Signed perpendicular distance of a point to the plane (n . x - d).
  double signed_distance(const Vec3& x) const { return normal.dot(x) - distance; }
};

/// Rigid transform x' = R x + t. Used as the extrinsic pose mapping points
/// from the reference-sensor frame into the depth-camera frame.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Orthonormality and det(+1) within 1e-9.
  bool is_valid(double tol = 1e-9) const;

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  /// this ∘ other: applies `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    return RigidTransform{rotation * other.rotation,
                          rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return RigidTransform{rt, -(rt * translation)};
  }
};

/// Pinhole parameters. No distortion model.
struct CameraIntrinsics {
  double fx{0.0};
  double fy{0.0};
  double cx{0.0};
  double cy{0.0};
  int width{0};
  int height{0};

  bool is_valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx > 0.0 &&
           cx < static_cast<double>(width) && cy > 0.0 &&
           cy < static_cast<double>(height);
  }

  bool contains(int u, int v) const {
    return u >= 0 && u < width && v >= 0 && v < height;
  }
};

struct PixelCoord {
  int u{0};
  int v{0};
};

}  // namespace depthcal
