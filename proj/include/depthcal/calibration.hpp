// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "depthcal/error_model.hpp"
#include "depthcal/geometry.hpp"
#include "depthcal/types.hpp"

namespace depthcal {

/// One (measured, reference) depth sample of a pixel, both in meters.
struct DepthPair {
  double measured{0.0};   // z
  double reference{0.0};  // z*
};

/// Per-pixel growable sets M_uv of depth pairs.
struct PairStore {
  int width{0};
  int height{0};
  std::vector<std::vector<DepthPair>> pixels;

  PairStore() = default;
  PairStore(int w, int h)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * width + static_cast<std::size_t>(u);
  }
  std::int64_t total_pairs() const;
};

/// Discretization of the depth axis used for the noise fit: sorted bin
/// centers (the sampling interval) and the half-window threshold t. A
/// measurement z enters bin k when |z - k| < t; bins may overlap when
/// t exceeds half the spacing.
struct BinningConfig {
  std::vector<double> bin_centers;
  double threshold{0.05};  // meters
  int min_samples_per_bin{50};

  /// Centers first, first+spacing, ... up to last (inclusive within 1e-9),
  /// with threshold = spacing / 2 (non-overlapping).
  static BinningConfig regular(double first = 0.4, double last = 5.0,
                               double spacing = 0.1);

  bool is_valid() const;
};

/// Pooled deviation of one bin: sigma_k with the pooled sample count.
struct SigmaSample {
  double bin_center{0.0};
  double sigma{0.0};
  std::int64_t count{0};
};

/// Residual sets grouped per (pixel, bin). Only non-empty pixel sets are
/// stored; pixel identity is not needed by the pooled deviation.
struct ResidualBins {
  std::vector<double> centers;
  // groups[b] lists, for bin b, the residual set of every contributing pixel.
  std::vector<std::vector<std::vector<double>>> groups;

  std::size_t bin_index(double center) const;  // throws if center not in Π
};

/// Computes z* for every valid pixel with 0 < z <= max_range and appends
/// (z, z*) to the pixel's set. Grazing rays, negative reference depths and
/// gross outliers (|z - z*| > gross_outlier_gate) are skipped.
void accumulate_pairs(const DepthFrame& frame, const PlaneHessian& plane_cam,
                      const CameraIntrinsics& intrinsics, PairStore& store,
                      double max_range, double gross_outlier_gate = 0.5);

/// S^k_uv = { z - z* : |z - k| < t } for every pixel and every k.
ResidualBins bin_residuals(const PairStore& store, const BinningConfig& config);

/// Pooled deviation of bin k: per-pixel means are removed before pooling,
/// and the pooled squared deviations are divided by the total sample count.
/// Returns nullopt when the pooled count is below min_samples.
std::optional<SigmaSample> pooled_sigma(const ResidualBins& bins, double k,
                                        std::int64_t min_samples);

/// Unweighted least-squares fit of sigma(k) = a k^2 + b k + c through the
/// pooled samples, solved in closed form on the normal equations. Throws
/// DegenerateSystemError for fewer than 3 distinct centers or a normal
/// matrix with condition number above 1e12.
NoiseModel fit_sigma_quadratic(std::span<const SigmaSample> samples,
                               double sigma_floor = 1e-4);

struct PixelFitOptions {
  int min_pairs{10};
  double span_min{0.5};         // meters of measured-depth span
  double max_condition{1e10};   // weighted normal matrix cap
};

/// Closed-form weighted least squares for one pixel: design rows
/// (z^2, z, 1), targets z - z*, weights 1 / sigma^2(z). Returns nullopt
/// (Insufficient) when the pixel cannot be constrained.
std::optional<PixelBias> fit_pixel_bias(std::span<const DepthPair> pairs,
                                        const NoiseModel& noise,
                                        const PixelFitOptions& options = {});

/// One calibration input: a depth frame paired with the plane observed by
/// the reference sensor (in the reference-sensor frame) at the same time.
struct Observation {
  DepthFrame frame;
  PlaneHessian plane_reference;
};

struct CalibrationOptions {
  BinningConfig binning = BinningConfig::regular();
  double max_range{5.0};
  double gross_outlier_gate{0.5};
  double distance_span_min{0.5};  // required spread of plane distances
  PixelFitOptions pixel_fit;
  double sigma_floor{1e-4};
  int threads{0};  // 0 = hardware concurrency
};

struct BinReport {
  double center{0.0};
  std::int64_t pooled_count{0};
  std::int64_t group_count{0};   // pixels contributing to the bin
  double sigma{0.0};
  double fit_residual{0.0};      // sigma_k - sigma_fit(k)
  bool used{false};              // false when below min_samples_per_bin
  // Mean-removal loses one degree of freedom per pixel; this is the factor
  // sqrt(N / (N - G)) an unbiased estimate would need.
  double bessel_factor{1.0};
};

struct CalibrationReport {
  std::int64_t total_pairs{0};
  std::int64_t valid_pixels{0};
  std::int64_t dropped_pixels{0};  // insufficient data, flagged invalid
  std::vector<BinReport> bins;
};

struct CalibrationResult {
  BiasMap bias_map;
  NoiseModel noise;
  CalibrationReport report;
};

/// Full pipeline: transform planes into the camera frame, accumulate pairs,
/// bin residuals, pool per-bin deviations, fit the global noise quadratic,
/// then fit every pixel's bias quadratic with 1/sigma^2 weights.
/// Throws TooFewDistancesError when the camera-frame plane distances span
/// less than distance_span_min.
CalibrationResult calibrate(std::span<const Observation> observations,
                            const RigidTransform& extrinsics,
                            const CameraIntrinsics& intrinsics,
                            const CalibrationOptions& options = {});

}  // namespace depthcal
