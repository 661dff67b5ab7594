// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/evaluation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <map>

#include "depthcal/errors.hpp"
#include "depthcal/geometry.hpp"

namespace depthcal {

PlaneHessian fit_plane_tls(const PointCloud& cloud) {
  if (cloud.size() < 3) {
    throw DegenerateCloudError("fit_plane_tls: need >= 3 points, got " +
                               std::to_string(cloud.size()));
  }
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.size());

  Mat3 scatter = Mat3::Zero();
  for (const Vec3& p : cloud.points) {
    const Vec3 q = p - centroid;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  const Vec3 eigenvalues = es.eigenvalues();  // ascending
  // Collinear (rank <= 1) clouds have no unique plane.
  if (!(eigenvalues(2) > 0.0) || eigenvalues(1) <= 1e-12 * eigenvalues(2)) {
    throw DegenerateCloudError("fit_plane_tls: points are collinear");
  }
  Vec3 normal = es.eigenvectors().col(0);
  double d = normal.dot(centroid);
  if (d < 0.0) {
    normal = -normal;
    d = -d;
  }
  return PlaneHessian{normal, d};
}

double rms_perpendicular(const PointCloud& cloud, const PlaneHessian& plane) {
  if (cloud.empty()) throw EmptyCloudError("rms_perpendicular: empty cloud");
  double sum = 0.0;
  for (const Vec3& p : cloud.points) {
    const double e = plane.signed_distance(p);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(cloud.size()));
}

double mean_signed_perpendicular(const PointCloud& cloud,
                                 const PlaneHessian& plane) {
  if (cloud.empty()) throw EmptyCloudError("mean_signed_perpendicular: empty cloud");
  double sum = 0.0;
  for (const Vec3& p : cloud.points) sum += plane.signed_distance(p);
  return sum / static_cast<double>(cloud.size());
}

std::vector<std::uint8_t> reference_inlier_mask(const DepthFrame& frame,
                                                const PlaneHessian& plane_cam,
                                                const CameraIntrinsics& intrinsics,
                                                double threshold) {
  if (frame.width != intrinsics.width || frame.height != intrinsics.height) {
    throw DimensionMismatchError("reference_inlier_mask: frame/intrinsics mismatch");
  }
  std::vector<std::uint8_t> mask(frame.pixel_count(), 0);
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const double z = frame.at(u, v);
      if (z <= 0.0) continue;
      const ReferenceDepth ref = reference_depth(
          plane_cam, backproject_ray(intrinsics, PixelCoord{u, v}));
      if (!ref) continue;
      if (std::abs(z - ref.depth) < threshold) mask[frame.index(u, v)] = 1;
    }
  }
  return mask;
}

PointCloud backproject_masked(const DepthFrame& frame,
                              const CameraIntrinsics& intrinsics,
                              std::span<const std::uint8_t> mask) {
  if (frame.width != intrinsics.width || frame.height != intrinsics.height ||
      mask.size() != frame.pixel_count()) {
    throw DimensionMismatchError("backproject_masked: dimensions disagree");
  }
  PointCloud cloud;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const std::size_t i = frame.index(u, v);
      if (!mask[i]) continue;
      const double z = frame.depths[i];
      if (z <= 0.0) continue;
      cloud.points.push_back(backproject_point(intrinsics, PixelCoord{u, v}, z));
      cloud.pixel_indices.push_back(static_cast<std::int32_t>(i));
    }
  }
  return cloud;
}

EvalRecord evaluate_local_frame(const DepthFrame& raw,
                                const DepthFrame& calibrated,
                                const CameraIntrinsics& intrinsics,
                                std::span<const std::uint8_t> mask) {
  const PointCloud cloud_raw = backproject_masked(raw, intrinsics, mask);
  const PointCloud cloud_cal = backproject_masked(calibrated, intrinsics, mask);
  const PlaneHessian plane_raw = fit_plane_tls(cloud_raw);
  const PlaneHessian plane_cal = fit_plane_tls(cloud_cal);
  EvalRecord rec;
  rec.nominal_distance = plane_raw.distance;
  rec.rms_raw = rms_perpendicular(cloud_raw, plane_raw);
  rec.rms_calibrated = rms_perpendicular(cloud_cal, plane_cal);
  rec.point_count = static_cast<std::int64_t>(cloud_raw.size());
  return rec;
}

EvalRecord evaluate_global_frame(const DepthFrame& raw,
                                 const DepthFrame& calibrated,
                                 const PlaneHessian& reference_cam,
                                 const CameraIntrinsics& intrinsics,
                                 std::span<const std::uint8_t> mask) {
  const PointCloud cloud_raw = backproject_masked(raw, intrinsics, mask);
  const PointCloud cloud_cal = backproject_masked(calibrated, intrinsics, mask);
  EvalRecord rec;
  rec.nominal_distance = reference_cam.distance;
  rec.rms_raw = rms_perpendicular(cloud_raw, reference_cam);
  rec.rms_calibrated = rms_perpendicular(cloud_cal, reference_cam);
  rec.point_count = static_cast<std::int64_t>(cloud_raw.size());
  return rec;
}

std::vector<EvalRecord> evaluate_local(
    std::span<const DepthFrame> raw, std::span<const DepthFrame> calibrated,
    const CameraIntrinsics& intrinsics,
    std::span<const std::vector<std::uint8_t>> masks) {
  if (raw.size() != calibrated.size() || raw.size() != masks.size()) {
    throw DimensionMismatchError("evaluate_local: sequence lengths disagree");
  }
  std::vector<EvalRecord> records;
  records.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    records.push_back(
        evaluate_local_frame(raw[i], calibrated[i], intrinsics, masks[i]));
  }
  return records;
}

std::vector<EvalRecord> evaluate_global(
    std::span<const DepthFrame> raw, std::span<const DepthFrame> calibrated,
    std::span<const PlaneHessian> reference_cam,
    const CameraIntrinsics& intrinsics,
    std::span<const std::vector<std::uint8_t>> masks) {
  if (raw.size() != calibrated.size() || raw.size() != masks.size() ||
      raw.size() != reference_cam.size()) {
    throw DimensionMismatchError("evaluate_global: sequence lengths disagree");
  }
  std::vector<EvalRecord> records;
  records.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    records.push_back(evaluate_global_frame(raw[i], calibrated[i],
                                            reference_cam[i], intrinsics,
                                            masks[i]));
  }
  return records;
}

std::vector<EvalBucket> bucket_records(std::span<const EvalRecord> records,
                                       double bucket_width) {
  if (!(bucket_width > 0.0)) {
    throw InvalidArgumentError("bucket_records: bucket width must be > 0");
  }
  struct Acc {
    double raw2{0.0};
    double cal2{0.0};
    std::int64_t n{0};
  };
  std::map<long long, Acc> acc;
  for (const EvalRecord& r : records) {
    const long long key = std::llround(r.nominal_distance / bucket_width);
    Acc& a = acc[key];
    const double n = static_cast<double>(r.point_count);
    a.raw2 += n * r.rms_raw * r.rms_raw;
    a.cal2 += n * r.rms_calibrated * r.rms_calibrated;
    a.n += r.point_count;
  }
  std::vector<EvalBucket> buckets;
  for (const auto& [key, a] : acc) {
    if (a.n == 0) continue;
    EvalBucket b;
    b.distance = static_cast<double>(key) * bucket_width;
    b.rms_raw = std::sqrt(a.raw2 / static_cast<double>(a.n));
    b.rms_calibrated = std::sqrt(a.cal2 / static_cast<double>(a.n));
    b.point_count = a.n;
    buckets.push_back(b);
  }
  return buckets;
}

void write_eval_csv(const std::filesystem::path& path,
                    std::span<const EvalBucket> buckets) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path.string());
  std::fprintf(f, "distance_m,rms_raw_m,rms_calibrated_m,n_points\n");
  for (const EvalBucket& b : buckets) {
    std::fprintf(f, "%.6f,%.9f,%.9f,%lld\n", b.distance, b.rms_raw,
                 b.rms_calibrated, static_cast<long long>(b.point_count));
  }
  std::fclose(f);
}

}  // namespace depthcal
