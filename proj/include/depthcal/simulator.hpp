// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "depthcal/calibration.hpp"
#include "depthcal/error_model.hpp"
#include "depthcal/types.hpp"

namespace depthcal {

/// Biquadratic surface over normalized pixel coordinates s, t in [-1, 1]:
/// sum_{i,j<=2} coeff[3*j + i] * s^i * t^j.
struct Biquadratic {
  std::array<double, 9> coeff{};

  double eval(double s, double t) const {
    const double sp[3] = {1.0, s, s * s};
    const double tp[3] = {1.0, t, t * t};
    double acc = 0.0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) acc += coeff[3 * j + i] * sp[i] * tp[j];
    return acc;
  }
};

/// Coefficient ranges for randomly drawn fields: each of a(u,v), b(u,v),
/// c(u,v) is base + amplitude * (random biquadratic normalized to max 1).
struct BiasFieldRanges {
  double base_a{0.0};
  double amp_a{5e-4};
  double base_b{0.0};
  double amp_b{2e-3};
  double base_c{0.0};
  double amp_c{2e-2};
};

/// Ground-truth per-pixel quadratic bias field, materialized per pixel from
/// smooth biquadratic coefficient surfaces. |mu(z)| must stay within 0.2 m
/// over the declared simulated depth range.
class GroundTruthBiasField {
 public:
  static GroundTruthBiasField from_polynomials(int width, int height,
                                               const Biquadratic& a,
                                               const Biquadratic& b,
                                               const Biquadratic& c,
                                               double z_min, double z_max);

  static GroundTruthBiasField random(int width, int height,
                                     const BiasFieldRanges& ranges,
                                     std::uint64_t seed, double z_min,
                                     double z_max);

  int width() const { return width_; }
  int height() const { return height_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }

  const PixelBias& at(int u, int v) const {
    return coefficients_[static_cast<std::size_t>(v) * width_ + u];
  }
  double mean_bias(int u, int v, double z) const {
    return depthcal::bias_mean(at(u, v), z);
  }

  /// All-valid BiasMap carrying the exact injected coefficients.
  BiasMap to_bias_map() const;

 private:
  GroundTruthBiasField() = default;
  void validate_range() const;

  int width_{0};
  int height_{0};
  double z_min_{0.0};
  double z_max_{0.0};
  std::vector<PixelBias> coefficients_;
};

/// Which depth the generative bias mean is evaluated at. `kReference`
/// injects mu(z*); `kMeasured` solves z = z* + mu(z) + eps so the pairs lie
/// exactly on the per-pixel quadratic (noise-free exactness checks).
enum class BiasArgument { kReference, kMeasured };

struct SimConfig {
  CameraIntrinsics intrinsics;
  RigidTransform extrinsics;        // reference -> camera
  std::vector<PlaneHessian> walls;  // reference-sensor frame
  double noise_a{0.0};              // sigma(z) = a z^2 + b z + c, clamped at 0
  double noise_b{0.0};
  double noise_c{0.0};
  double quant_step{0.0};           // meters; 0 disables quantization
  bool quant_quadratic{false};      // step(z) = z^2 / 1024 when enabled
  std::uint64_t seed{0};
  BiasArgument bias_argument{BiasArgument::kReference};
};

struct SimulatedFrame {
  DepthFrame frame;
  PlaneHessian wall_reference;  // the observed wall, reference-sensor frame
};

/// Renders one wall observation: per pixel z* from the plane constraint,
/// z = z* + mu + eps with eps ~ N(0, sigma^2(z*)), optional quantization.
/// Pixels whose ray misses the wall (grazing or behind the camera) are
/// sentinel. Throws WallBehindCameraError when nothing is visible.
SimulatedFrame simulate_frame(const SimConfig& config, int wall_index,
                              const GroundTruthBiasField& truth);

struct DatasetPaths {
  std::filesystem::path directory;
  std::filesystem::path manifest;
  std::filesystem::path sensor_config;
  std::filesystem::path planes;
  std::filesystem::path ground_truth;
  std::filesystem::path metadata;
  std::vector<std::filesystem::path> frames;
};

/// Writes the dataset in the toolkit's file formats: 16-bit PGM depth
/// rasters, JSON-lines plane observations, sensor config JSON, manifest
/// JSON, the ground-truth calibration (for oracle comparison) and an RNG
/// metadata record.
DatasetPaths generate_dataset(const SimConfig& config,
                              const GroundTruthBiasField& truth,
                              const std::filesystem::path& out_dir);

}  // namespace depthcal
