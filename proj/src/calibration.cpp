// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/calibration.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "depthcal/errors.hpp"
#include "depthcal/parallel.hpp"

namespace depthcal {
namespace {

// Condition number of a symmetric PSD 3x3 via its eigenvalue spread.
double condition_number(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(2);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

std::int64_t PairStore::total_pairs() const {
  std::int64_t n = 0;
  for (const auto& px : pixels) n += static_cast<std::int64_t>(px.size());
  return n;
}

BinningConfig BinningConfig::regular(double first, double last,
                                     double spacing) {
  if (!(spacing > 0.0) || !(last >= first)) {
    throw InvalidArgumentError("BinningConfig::regular: bad interval");
  }
  BinningConfig config;
  for (double k = first; k <= last + 1e-9; k += spacing) {
    config.bin_centers.push_back(k);
  }
  config.threshold = spacing / 2.0;
  return config;
}

bool BinningConfig::is_valid() const {
  if (bin_centers.empty() || !(threshold > 0.0) || min_samples_per_bin < 1) {
    return false;
  }
  for (std::size_t i = 1; i < bin_centers.size(); ++i) {
    if (!(bin_centers[i] > bin_centers[i - 1])) return false;
  }
  return true;
}

std::size_t ResidualBins::bin_index(double center) const {
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (std::abs(centers[i] - center) <= 1e-9) return i;
  }
  throw InvalidArgumentError("bin center not part of the sampling interval");
}

void accumulate_pairs(const DepthFrame& frame, const PlaneHessian& plane_cam,
                      const CameraIntrinsics& intrinsics, PairStore& store,
                      double max_range, double gross_outlier_gate) {
  if (frame.width != intrinsics.width || frame.height != intrinsics.height ||
      frame.width != store.width || frame.height != store.height) {
    throw DimensionMismatchError(
        "accumulate_pairs: frame, intrinsics and store dimensions disagree");
  }
  if (!(max_range > 0.0)) {
    throw InvalidArgumentError("accumulate_pairs: max_range must be > 0");
  }
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const double z = frame.at(u, v);
      if (z <= 0.0 || z > max_range) continue;
      const Vec3 ray = backproject_ray(intrinsics, PixelCoord{u, v});
      const ReferenceDepth ref = reference_depth(plane_cam, ray);
      if (!ref) continue;
      if (std::abs(z - ref.depth) > gross_outlier_gate) continue;
      store.pixels[store.index(u, v)].push_back(DepthPair{z, ref.depth});
    }
  }
}

ResidualBins bin_residuals(const PairStore& store,
                           const BinningConfig& config) {
  if (!config.is_valid()) {
    throw InvalidArgumentError("bin_residuals: invalid binning config");
  }
  ResidualBins bins;
  bins.centers = config.bin_centers;
  bins.groups.resize(bins.centers.size());

  std::vector<double> scratch;
  for (const auto& pairs : store.pixels) {
    if (pairs.empty()) continue;
    for (std::size_t b = 0; b < bins.centers.size(); ++b) {
      const double k = bins.centers[b];
      scratch.clear();
      for (const DepthPair& p : pairs) {
        if (std::abs(p.measured - k) < config.threshold) {
          scratch.push_back(p.measured - p.reference);
        }
      }
      if (!scratch.empty()) {
        bins.groups[b].push_back(scratch);
      }
    }
  }
  return bins;
}

std::optional<SigmaSample> pooled_sigma(const ResidualBins& bins, double k,
                                        std::int64_t min_samples) {
  const auto& groups = bins.groups[bins.bin_index(k)];

  std::int64_t total = 0;
  for (const auto& set : groups) total += static_cast<std::int64_t>(set.size());
  if (total < min_samples) return std::nullopt;

  // Per-pixel means removed before pooling; normalization is the plain
  // pooled count, without a Bessel-style correction for the means.
  double dev2 = 0.0;
  for (const auto& set : groups) {
    double mean = 0.0;
    for (double r : set) mean += r;
    mean /= static_cast<double>(set.size());
    for (double r : set) dev2 += (r - mean) * (r - mean);
  }
  return SigmaSample{k, std::sqrt(dev2 / static_cast<double>(total)), total};
}

NoiseModel fit_sigma_quadratic(std::span<const SigmaSample> samples,
                               double sigma_floor) {
  std::vector<double> centers;
  for (const auto& s : samples) centers.push_back(s.bin_center);
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                centers.end());
  if (centers.size() < 3) {
    throw DegenerateSystemError(
        "fit_sigma_quadratic: need >= 3 distinct bin centers, got " +
        std::to_string(centers.size()));
  }

  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& s : samples) {
    const Vec3 x{s.bin_center * s.bin_center, s.bin_center, 1.0};
    normal += x * x.transpose();
    rhs += x * s.sigma;
  }
  if (condition_number(normal) > 1e12) {
    throw DegenerateSystemError("fit_sigma_quadratic: normal matrix is singular");
  }
  const Vec3 coeffs = normal.ldlt().solve(rhs);
  NoiseModel model;
  model.a = coeffs(0);
  model.b = coeffs(1);
  model.c = coeffs(2);
  model.sigma_floor = sigma_floor;
  return model;
}

std::optional<PixelBias> fit_pixel_bias(std::span<const DepthPair> pairs,
                                        const NoiseModel& noise,
                                        const PixelFitOptions& options) {
  if (static_cast<int>(pairs.size()) < options.min_pairs) return std::nullopt;

  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -std::numeric_limits<double>::infinity();
  for (const DepthPair& p : pairs) {
    z_min = std::min(z_min, p.measured);
    z_max = std::max(z_max, p.measured);
  }
  if (z_max - z_min < options.span_min) return std::nullopt;

  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const DepthPair& p : pairs) {
    const double sigma = noise_sigma(noise, p.measured);
    const double w = 1.0 / (sigma * sigma);
    const Vec3 x{p.measured * p.measured, p.measured, 1.0};
    normal += w * (x * x.transpose());
    rhs += w * x * (p.measured - p.reference);
  }
  if (condition_number(normal) > options.max_condition) return std::nullopt;

  const Vec3 coeffs = normal.ldlt().solve(rhs);
  return PixelBias{coeffs(0), coeffs(1), coeffs(2)};
}

CalibrationResult calibrate(std::span<const Observation> observations,
                            const RigidTransform& extrinsics,
                            const CameraIntrinsics& intrinsics,
                            const CalibrationOptions& options) {
  if (observations.empty()) {
    throw TooFewDistancesError("calibrate: no observations");
  }
  if (!options.binning.is_valid()) {
    throw InvalidArgumentError("calibrate: invalid binning config");
  }

  std::vector<PlaneHessian> planes_cam;
  planes_cam.reserve(observations.size());
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = -std::numeric_limits<double>::infinity();
  for (const Observation& obs : observations) {
    planes_cam.push_back(transform_plane(obs.plane_reference, extrinsics));
    d_min = std::min(d_min, planes_cam.back().distance);
    d_max = std::max(d_max, planes_cam.back().distance);
  }
  if (d_max - d_min < options.distance_span_min) {
    throw TooFewDistancesError(
        "calibrate: plane distances span " + std::to_string(d_max - d_min) +
        " m, need >= " + std::to_string(options.distance_span_min) +
        " m for an identifiable quadratic");
  }

  PairStore store(intrinsics.width, intrinsics.height);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    accumulate_pairs(observations[i].frame, planes_cam[i], intrinsics, store,
                     options.max_range, options.gross_outlier_gate);
  }

  // Canonical per-pixel pair order: the result is a function of the pair
  // multiset, so summation order must not leak the observation order.
  for (auto& pairs : store.pixels) {
    std::sort(pairs.begin(), pairs.end(),
              [](const DepthPair& x, const DepthPair& y) {
                return x.measured != y.measured ? x.measured < y.measured
                                                : x.reference < y.reference;
              });
  }

  const ResidualBins bins = bin_residuals(store, options.binning);

  CalibrationResult result;
  result.report.total_pairs = store.total_pairs();

  std::vector<SigmaSample> sigma_samples;
  for (double k : options.binning.bin_centers) {
    const auto sample =
        pooled_sigma(bins, k, options.binning.min_samples_per_bin);
    BinReport br;
    br.center = k;
    const auto& groups = bins.groups[bins.bin_index(k)];
    br.group_count = static_cast<std::int64_t>(groups.size());
    std::int64_t pooled = 0;
    for (const auto& g : groups) pooled += static_cast<std::int64_t>(g.size());
    br.pooled_count = pooled;
    if (sample) {
      br.used = true;
      br.sigma = sample->sigma;
      if (pooled > br.group_count) {
        br.bessel_factor = std::sqrt(static_cast<double>(pooled) /
                                     static_cast<double>(pooled - br.group_count));
      }
      sigma_samples.push_back(*sample);
    }
    result.report.bins.push_back(br);
  }

  result.noise = fit_sigma_quadratic(sigma_samples, options.sigma_floor);
  for (auto& br : result.report.bins) {
    if (br.used) {
      br.fit_residual =
          br.sigma - ((result.noise.a * br.center + result.noise.b) * br.center +
                      result.noise.c);
    }
  }

  BiasMap bias_map(intrinsics.width, intrinsics.height);
  const NoiseModel noise = result.noise;
  const PixelFitOptions fit_options = options.pixel_fit;
  parallel_for_chunks(
      0, static_cast<std::int64_t>(store.pixels.size()), options.threads,
      [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
          const auto& pairs = store.pixels[static_cast<std::size_t>(i)];
          const auto fitted = fit_pixel_bias(pairs, noise, fit_options);
          if (fitted) {
            bias_map.coefficients[static_cast<std::size_t>(i)] = *fitted;
            bias_map.valid[static_cast<std::size_t>(i)] = 1;
          }
        }
      });

  result.report.valid_pixels = bias_map.valid_count();
  result.report.dropped_pixels =
      static_cast<std::int64_t>(bias_map.valid.size()) -
      result.report.valid_pixels;
  result.bias_map = std::move(bias_map);
  return result;
}

}  // namespace depthcal
