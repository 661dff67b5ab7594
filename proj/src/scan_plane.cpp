// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/scan_plane.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "depthcal/errors.hpp"

namespace depthcal {
namespace {

struct Line2D {
  Eigen::Vector2d normal;  // unit
  double distance;         // n . p = d, d >= 0
};

Line2D tls_line(const std::vector<Eigen::Vector2d>& points,
                const std::vector<int>& subset) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (int i : subset) centroid += points[static_cast<std::size_t>(i)];
  centroid /= static_cast<double>(subset.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (int i : subset) {
    const Eigen::Vector2d q = points[static_cast<std::size_t>(i)] - centroid;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
  Eigen::Vector2d n = es.eigenvectors().col(0);
  double d = n.dot(centroid);
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  return Line2D{n, d};
}

std::vector<int> line_inliers(const std::vector<Eigen::Vector2d>& points,
                              const Line2D& line, double threshold) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(line.normal.dot(points[i]) - line.distance) <= threshold) {
      inliers.push_back(static_cast<int>(i));
    }
  }
  return inliers;
}

}  // namespace

std::optional<PlaneHessian> extract_plane_from_scan(const LaserScan2D& scan,
                                                    const RansacParams& params) {
  if (!scan.is_valid()) {
    throw InvalidArgumentError("extract_plane_from_scan: malformed scan");
  }
  if (params.iterations < 1 || !(params.inlier_threshold > 0.0) ||
      params.min_inliers < 2) {
    throw InvalidArgumentError("extract_plane_from_scan: bad RANSAC parameters");
  }

  std::vector<Eigen::Vector2d> points;
  points.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!(r > 0.0) || !std::isfinite(r)) continue;
    const double angle = scan.angle_min + static_cast<double>(i) * scan.angle_increment;
    points.emplace_back(r * std::cos(angle), r * std::sin(angle));
  }
  if (static_cast<int>(points.size()) < params.min_inliers) return std::nullopt;

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  std::size_t best_count = 0;
  Line2D best_line{};
  for (int it = 0; it < params.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) continue;
    const Eigen::Vector2d delta = points[j] - points[i];
    const double len = delta.norm();
    if (len < 1e-12) continue;
    Eigen::Vector2d n(-delta.y() / len, delta.x() / len);
    double d = n.dot(points[i]);
    if (d < 0.0) {
      n = -n;
      d = -d;
    }
    const Line2D candidate{n, d};
    std::size_t count = 0;
    for (const Eigen::Vector2d& p : points) {
      if (std::abs(n.dot(p) - d) <= params.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_line = candidate;
    }
  }
  if (best_count < static_cast<std::size_t>(params.min_inliers)) {
    return std::nullopt;
  }

  // Refine on the consensus set, re-collect, refine once more.
  std::vector<int> inliers = line_inliers(points, best_line, params.inlier_threshold);
  Line2D refined = tls_line(points, inliers);
  inliers = line_inliers(points, refined, params.inlier_threshold);
  if (inliers.size() < static_cast<std::size_t>(params.min_inliers)) {
    return std::nullopt;
  }
  refined = tls_line(points, inliers);

  // Vertical wall: plane contains the line and the scanner's z axis direction.
  return PlaneHessian::normalized(
      Vec3{refined.normal.x(), refined.normal.y(), 0.0}, refined.distance);
}

}  // namespace depthcal
