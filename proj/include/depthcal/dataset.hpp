// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "depthcal/error_model.hpp"
#include "depthcal/scan_plane.hpp"
#include "depthcal/simulator.hpp"
#include "depthcal/types.hpp"

namespace depthcal {

/// Intrinsics plus the extrinsic pose. The extrinsics direction is fixed by
/// convention and recorded in the file: points map reference -> camera,
/// x_cam = R x_ref + t.
struct SensorConfig {
  CameraIntrinsics intrinsics;
  RigidTransform extrinsics;
};

SensorConfig load_sensor_config(const std::filesystem::path& path);
void save_sensor_config(const std::filesystem::path& path,
                        const SensorConfig& config);

/// One pre-associated manifest record: the depth raster and the plane the
/// reference sensor observed at the same instant (reference-sensor frame).
struct FrameRecord {
  double timestamp{0.0};  // seconds, strictly increasing across records
  std::filesystem::path depth_file;  // resolved absolute path
  PlaneHessian plane_reference;
};

struct DatasetManifest {
  SensorConfig sensors;
  std::vector<FrameRecord> records;
};

/// Loads manifest.json, its sensor config and the JSON-lines plane
/// observations. Plane records may alternatively carry a raw 2D scan, which
/// is lifted to a plane via RANSAC with `scan_params` (vertical-wall
/// assumption). Validates timestamp association and file existence.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path,
                              const RansacParams& scan_params = {});

/// Reads the depth raster of one record.
DepthFrame load_frame(const FrameRecord& record);

// Writers used by the dataset generator (formats live here in one place).
void save_manifest(const std::filesystem::path& path,
                   const std::string& config_relative,
                   const std::string& planes_relative,
                   const std::vector<std::pair<double, std::string>>& frames);
void save_planes_jsonl(
    const std::filesystem::path& path,
    const std::vector<std::pair<double, PlaneHessian>>& planes);

/// Simulation description parsed from JSON: camera, extrinsics, noise,
/// quantization, wall list (explicit or generated sweep) and the
/// ground-truth bias field (explicit biquadratics or a seeded random draw).
struct SimSpec {
  SimConfig config;
  GroundTruthBiasField truth;
};

SimSpec load_sim_spec(const std::filesystem::path& path);

}  // namespace depthcal
