// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "depthcal/calibration_file.hpp"
#include "depthcal/dataset.hpp"
#include "depthcal/depth_image.hpp"
#include "depthcal/errors.hpp"
#include "depthcal/file_io.hpp"
#include "depthcal/geometry.hpp"
#include "depthcal/parallel.hpp"
#include "depthcal/rng.hpp"

namespace depthcal {
namespace {

double sim_sigma(const SimConfig& config, double z) {
  return std::max((config.noise_a * z + config.noise_b) * z + config.noise_c,
                  0.0);
}

double quantize(double z, double step) {
  return step > 0.0 ? std::round(z / step) * step : z;
}

// z = z* + mu(z) + offset, solved by Newton iteration. mu has derivative
// well below 1 over admissible fields, so this converges in a few steps.
double solve_measured_bias(const PixelBias& bias, double z_star,
                           double offset) {
  double z = z_star;
  for (int it = 0; it < 50; ++it) {
    const double f = z - bias_mean(bias, z) - z_star - offset;
    const double fp = 1.0 - (2.0 * bias.a * z + bias.b);
    const double step = f / fp;
    z -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return z;
}

}  // namespace

GroundTruthBiasField GroundTruthBiasField::from_polynomials(
    int width, int height, const Biquadratic& a, const Biquadratic& b,
    const Biquadratic& c, double z_min, double z_max) {
  if (width < 2 || height < 2 || !(z_min > 0.0) || !(z_max > z_min)) {
    throw InvalidArgumentError("GroundTruthBiasField: bad dimensions or range");
  }
  GroundTruthBiasField field;
  field.width_ = width;
  field.height_ = height;
  field.z_min_ = z_min;
  field.z_max_ = z_max;
  field.coefficients_.resize(static_cast<std::size_t>(width) * height);
  for (int v = 0; v < height; ++v) {
    const double t = 2.0 * v / (height - 1) - 1.0;
    for (int u = 0; u < width; ++u) {
      const double s = 2.0 * u / (width - 1) - 1.0;
      field.coefficients_[static_cast<std::size_t>(v) * width + u] =
          PixelBias{a.eval(s, t), b.eval(s, t), c.eval(s, t)};
    }
  }
  field.validate_range();
  return field;
}

GroundTruthBiasField GroundTruthBiasField::random(int width, int height,
                                                  const BiasFieldRanges& ranges,
                                                  std::uint64_t seed,
                                                  double z_min, double z_max) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  auto draw = [&](double base, double amplitude) {
    Biquadratic q;
    for (double& c : q.coeff) c = unit(rng);
    // Normalize so the spatial variation peaks at `amplitude` over the square.
    double peak = 0.0;
    constexpr int kProbe = 33;
    for (int j = 0; j < kProbe; ++j) {
      const double t = 2.0 * j / (kProbe - 1) - 1.0;
      for (int i = 0; i < kProbe; ++i) {
        const double s = 2.0 * i / (kProbe - 1) - 1.0;
        peak = std::max(peak, std::abs(q.eval(s, t)));
      }
    }
    if (peak > 0.0) {
      for (double& c : q.coeff) c *= amplitude / peak;
    }
    q.coeff[0] += base;
    return q;
  };

  const Biquadratic a = draw(ranges.base_a, ranges.amp_a);
  const Biquadratic b = draw(ranges.base_b, ranges.amp_b);
  const Biquadratic c = draw(ranges.base_c, ranges.amp_c);
  return from_polynomials(width, height, a, b, c, z_min, z_max);
}

void GroundTruthBiasField::validate_range() const {
  // Per-pixel quadratic in z: extremes sit at the interval ends or the vertex.
  double worst = 0.0;
  for (const PixelBias& p : coefficients_) {
    double m = std::max(std::abs(bias_mean(p, z_min_)),
                        std::abs(bias_mean(p, z_max_)));
    if (p.a != 0.0) {
      const double vertex = -p.b / (2.0 * p.a);
      if (vertex > z_min_ && vertex < z_max_) {
        m = std::max(m, std::abs(bias_mean(p, vertex)));
      }
    }
    worst = std::max(worst, m);
  }
  if (worst > 0.2) {
    throw InvalidArgumentError(
        "GroundTruthBiasField: |mu| reaches " + std::to_string(worst) +
        " m over the simulated range; the admissible ceiling is 0.2 m");
  }
}

BiasMap GroundTruthBiasField::to_bias_map() const {
  BiasMap map(width_, height_);
  map.coefficients = coefficients_;
  std::fill(map.valid.begin(), map.valid.end(), std::uint8_t{1});
  return map;
}

SimulatedFrame simulate_frame(const SimConfig& config, int wall_index,
                              const GroundTruthBiasField& truth) {
  if (wall_index < 0 ||
      wall_index >= static_cast<int>(config.walls.size())) {
    throw InvalidArgumentError("simulate_frame: wall index out of range");
  }
  const CameraIntrinsics& k = config.intrinsics;
  if (!k.is_valid() || truth.width() != k.width || truth.height() != k.height) {
    throw DimensionMismatchError(
        "simulate_frame: truth field and intrinsics dimensions disagree");
  }
  const PlaneHessian wall = config.walls[static_cast<std::size_t>(wall_index)];
  const PlaneHessian plane_cam = transform_plane(wall, config.extrinsics);

  GaussianStream noise(derive_stream_seed(
      config.seed, static_cast<std::uint64_t>(wall_index)));

  SimulatedFrame out;
  out.wall_reference = wall;
  out.frame = DepthFrame(k.width, k.height);
  std::int64_t visible = 0;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double g = noise.next();  // one draw per pixel, geometry-independent
      const ReferenceDepth ref =
          reference_depth(plane_cam, backproject_ray(k, PixelCoord{u, v}));
      if (!ref) continue;
      const double z_star = ref.depth;
      const PixelBias& bias = truth.at(u, v);
      const double eps = g * sim_sigma(config, z_star);

      double z;
      if (config.bias_argument == BiasArgument::kReference) {
        z = z_star + bias_mean(bias, z_star) + eps;
      } else {
        z = solve_measured_bias(bias, z_star, eps);
      }
      if (config.quant_quadratic) {
        z = quantize(z, z * z / 1024.0);
      } else {
        z = quantize(z, config.quant_step);
      }
      if (z <= 0.0) continue;
      out.frame.set(u, v, z);
      ++visible;
    }
  }
  if (visible == 0) {
    throw WallBehindCameraError("simulate_frame: wall " +
                                std::to_string(wall_index) +
                                " is not visible from the camera");
  }
  return out;
}

DatasetPaths generate_dataset(const SimConfig& config,
                              const GroundTruthBiasField& truth,
                              const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "frames", ec);
  if (ec) {
    throw IoError("cannot create dataset directory: " + out_dir.string() +
                  " (" + ec.message() + ")");
  }

  DatasetPaths paths;
  paths.directory = out_dir;
  paths.sensor_config = out_dir / "config.json";
  paths.planes = out_dir / "planes.jsonl";
  paths.manifest = out_dir / "manifest.json";
  paths.ground_truth = out_dir / "ground_truth.dcal";
  paths.metadata = out_dir / "sim_metadata.json";

  save_sensor_config(paths.sensor_config,
                     SensorConfig{config.intrinsics, config.extrinsics});

  const int n = static_cast<int>(config.walls.size());
  std::vector<SimulatedFrame> rendered(static_cast<std::size_t>(n));
  parallel_for_chunks(0, n, 0, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      rendered[static_cast<std::size_t>(i)] =
          simulate_frame(config, static_cast<int>(i), truth);
    }
  });

  std::vector<std::pair<double, std::string>> frame_entries;
  std::vector<std::pair<double, PlaneHessian>> plane_entries;
  for (int i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "frames/frame_%06d.pgm", i);
    const double timestamp = 0.1 * static_cast<double>(i);
    const fs::path frame_path = out_dir / name;
    write_depth_frame(frame_path, rendered[static_cast<std::size_t>(i)].frame);
    paths.frames.push_back(frame_path);
    frame_entries.emplace_back(timestamp, name);
    plane_entries.emplace_back(timestamp,
                               rendered[static_cast<std::size_t>(i)].wall_reference);
  }
  save_planes_jsonl(paths.planes, plane_entries);
  save_manifest(paths.manifest, "config.json", "planes.jsonl", frame_entries);

  // Ground truth for oracle comparison, stored in the calibration format.
  CalibrationData gt;
  gt.bias_map = truth.to_bias_map();
  gt.noise = NoiseModel{config.noise_a, config.noise_b, config.noise_c, 1e-4};
  gt.provenance = nlohmann::json{{"kind", "ground_truth"},
                                 {"seed", config.seed},
                                 {"rng", kRngAlgorithm}}
                      .dump();
  write_calibration_binary(paths.ground_truth, gt);

  nlohmann::json meta{
      {"rng", kRngAlgorithm},
      {"seed", config.seed},
      {"frames", n},
      {"noise", {{"a", config.noise_a}, {"b", config.noise_b}, {"c", config.noise_c}}},
      {"quantization",
       {{"step", config.quant_step}, {"quadratic", config.quant_quadratic}}},
      {"bias_argument",
       config.bias_argument == BiasArgument::kReference ? "reference" : "measured"},
      {"bias_range", {{"z_min", truth.z_min()}, {"z_max", truth.z_max()}}}};
  write_file_atomic(paths.metadata, meta.dump(1, '\t') + "\n");
  return paths;
}

}  // namespace depthcal
