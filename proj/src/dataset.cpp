// License: Apache 2.0. See LICENSE file in root directory.

#include "depthcal/dataset.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "depthcal/depth_image.hpp"
#include "depthcal/errors.hpp"
#include "depthcal/file_io.hpp"

namespace depthcal {
namespace {

using nlohmann::json;

json parse(const std::string& text, const std::string& context) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFileError("invalid JSON: " + context);
  return j;
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  if (!k.is_valid()) throw ConfigError("invalid intrinsics");
  return k;
}

json intrinsics_to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
              {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

RigidTransform extrinsics_from_json(const json& j) {
  if (j.contains("direction") &&
      j.at("direction").get<std::string>() != "reference_to_camera") {
    throw ConfigError(
        "extrinsics direction must be \"reference_to_camera\" (x_cam = R x_ref + t)");
  }
  RigidTransform pose;
  if (j.contains("rotation")) {
    const auto& rows = j.at("rotation");
    if (rows.size() != 3) throw ConfigError("rotation must be a 3x3 array");
    for (int r = 0; r < 3; ++r) {
      if (rows[r].size() != 3) throw ConfigError("rotation must be a 3x3 array");
      for (int c = 0; c < 3; ++c) {
        pose.rotation(r, c) = rows[r][c].get<double>();
      }
    }
  } else if (j.contains("quaternion")) {
    const auto& q = j.at("quaternion");
    Eigen::Quaterniond quat(q.at("w").get<double>(), q.at("x").get<double>(),
                            q.at("y").get<double>(), q.at("z").get<double>());
    if (quat.norm() < 1e-12) throw ConfigError("zero quaternion");
    pose.rotation = quat.normalized().toRotationMatrix();
  } else {
    throw ConfigError("extrinsics need \"rotation\" or \"quaternion\"");
  }
  if (!pose.is_valid(1e-6)) {
    throw ConfigError("extrinsics rotation is not orthonormal with det +1");
  }
  // Snap file-precision matrices to an exact rotation.
  pose.rotation =
      Eigen::Quaterniond(pose.rotation).normalized().toRotationMatrix();

  const auto& t = j.at("translation");
  if (t.size() != 3) throw ConfigError("translation must have 3 entries");
  pose.translation = Vec3{t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
  return pose;
}

json extrinsics_to_json(const RigidTransform& pose) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  }
  return json{{"direction", "reference_to_camera"},
              {"rotation", rows},
              {"translation",
               {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

}  // namespace

SensorConfig load_sensor_config(const std::filesystem::path& path) {
  const json j = parse(read_file(path), path.string());
  try {
    SensorConfig config;
    config.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    config.extrinsics = extrinsics_from_json(j.at("extrinsics"));
    return config;
  } catch (const json::exception& e) {
    throw ConfigError("bad sensor config (" + std::string(e.what()) + "): " +
                      path.string());
  }
}

void save_sensor_config(const std::filesystem::path& path,
                        const SensorConfig& config) {
  json j;
  j["intrinsics"] = intrinsics_to_json(config.intrinsics);
  j["extrinsics"] = extrinsics_to_json(config.extrinsics);
  write_file_atomic(path, j.dump(1, '\t') + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path,
                              const RansacParams& scan_params) {
  const std::filesystem::path root = manifest_path.parent_path();
  const json j = parse(read_file(manifest_path), manifest_path.string());

  DatasetManifest manifest;
  std::vector<std::pair<double, std::string>> frames;
  std::filesystem::path planes_path;
  try {
    manifest.sensors =
        load_sensor_config(root / j.at("config").get<std::string>());
    planes_path = root / j.at("planes").get<std::string>();
    for (const auto& f : j.at("frames")) {
      frames.emplace_back(f.at("timestamp").get<double>(),
                          f.at("depth_file").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest (" + std::string(e.what()) + "): " +
                      manifest_path.string());
  }

  // JSON-lines plane observations, one record per frame, pre-associated.
  std::istringstream lines(read_file(planes_path));
  std::string line;
  std::vector<std::pair<double, PlaneHessian>> planes;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string context =
        planes_path.string() + ":" + std::to_string(line_no);
    const json rec = parse(line, context);
    try {
      const double ts = rec.at("timestamp").get<double>();
      if (rec.contains("scan")) {
        const auto& s = rec.at("scan");
        LaserScan2D scan;
        scan.angle_min = s.at("angle_min").get<double>();
        scan.angle_increment = s.at("angle_increment").get<double>();
        scan.ranges = s.at("ranges").get<std::vector<double>>();
        const auto plane = extract_plane_from_scan(scan, scan_params);
        if (!plane) {
          throw NoLineError("no wall line in scan record at " + context);
        }
        planes.emplace_back(ts, *plane);
      } else {
        planes.emplace_back(
            ts, PlaneHessian::normalized(
                    Vec3{rec.at("nx").get<double>(), rec.at("ny").get<double>(),
                         rec.at("nz").get<double>()},
                    rec.at("d").get<double>()));
      }
    } catch (const json::exception& e) {
      throw CorruptFileError("bad plane record (" + std::string(e.what()) +
                             ") at " + context);
    }
  }

  if (planes.size() != frames.size()) {
    throw CorruptFileError(
        "manifest lists " + std::to_string(frames.size()) + " frames but " +
        std::to_string(planes.size()) + " plane records: " +
        manifest_path.string());
  }
  double prev_ts = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (std::abs(frames[i].first - planes[i].first) > 1e-9) {
      throw CorruptFileError("frame/plane timestamp mismatch at record " +
                             std::to_string(i) + ": " + manifest_path.string());
    }
    if (!(frames[i].first > prev_ts)) {
      throw CorruptFileError("timestamps not strictly increasing at record " +
                             std::to_string(i) + ": " + manifest_path.string());
    }
    prev_ts = frames[i].first;

    FrameRecord record;
    record.timestamp = frames[i].first;
    record.depth_file = root / frames[i].second;
    record.plane_reference = planes[i].second;
    if (!std::filesystem::exists(record.depth_file)) {
      throw IoError("referenced depth raster missing: " +
                    record.depth_file.string());
    }
    manifest.records.push_back(std::move(record));
  }
  return manifest;
}

DepthFrame load_frame(const FrameRecord& record) {
  return read_depth_frame(record.depth_file);
}

void save_manifest(const std::filesystem::path& path,
                   const std::string& config_relative,
                   const std::string& planes_relative,
                   const std::vector<std::pair<double, std::string>>& frames) {
  json j;
  j["version"] = 1;
  j["config"] = config_relative;
  j["planes"] = planes_relative;
  json arr = json::array();
  for (const auto& [ts, file] : frames) {
    arr.push_back({{"timestamp", ts}, {"depth_file", file}});
  }
  j["frames"] = std::move(arr);
  write_file_atomic(path, j.dump(1, '\t') + "\n");
}

void save_planes_jsonl(
    const std::filesystem::path& path,
    const std::vector<std::pair<double, PlaneHessian>>& planes) {
  std::string out;
  for (const auto& [ts, plane] : planes) {
    json rec{{"timestamp", ts},
             {"nx", plane.normal.x()},
             {"ny", plane.normal.y()},
             {"nz", plane.normal.z()},
             {"d", plane.distance}};
    out += rec.dump();
    out += "\n";
  }
  write_file_atomic(path, out);
}

SimSpec load_sim_spec(const std::filesystem::path& path) {
  const json j = parse(read_file(path), path.string());
  try {
    SimConfig config;
    config.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    config.extrinsics = extrinsics_from_json(j.at("extrinsics"));
    if (j.contains("noise")) {
      config.noise_a = j["noise"].value("a", 0.0);
      config.noise_b = j["noise"].value("b", 0.0);
      config.noise_c = j["noise"].value("c", 0.0);
    }
    if (j.contains("quantization")) {
      config.quant_step = j["quantization"].value("step", 0.0);
      config.quant_quadratic = j["quantization"].value("quadratic", false);
    }
    config.seed = j.value("seed", 0ULL);
    if (j.contains("bias_argument")) {
      const std::string arg = j["bias_argument"].get<std::string>();
      if (arg == "reference") {
        config.bias_argument = BiasArgument::kReference;
      } else if (arg == "measured") {
        config.bias_argument = BiasArgument::kMeasured;
      } else {
        throw ConfigError("bias_argument must be \"reference\" or \"measured\"");
      }
    }

    const auto& walls = j.at("walls");
    if (walls.is_array()) {
      for (const auto& w : walls) {
        config.walls.push_back(PlaneHessian::normalized(
            Vec3{w.at("nx").get<double>(), w.at("ny").get<double>(),
                 w.at("nz").get<double>()},
            w.at("d").get<double>()));
      }
    } else {
      // Sweep: distances evenly spaced, each repeated `repeats` times, with
      // the wall orientation cycling through `pattern` per frame.
      const int count = walls.at("count").get<int>();
      const double d_min = walls.at("distance_min").get<double>();
      const double d_max = walls.at("distance_max").get<double>();
      const int repeats = walls.value("repeats", 1);
      if (count < 1 || repeats < 1 || !(d_max >= d_min) || !(d_min > 0.0)) {
        throw ConfigError("bad wall sweep");
      }
      struct Orientation {
        std::string axis;
        double angle_rad;
      };
      std::vector<Orientation> pattern;
      if (walls.contains("pattern")) {
        for (const auto& p : walls.at("pattern")) {
          pattern.push_back({p.value("axis", "none"),
                             p.value("angle_deg", 0.0) * M_PI / 180.0});
        }
      }
      if (pattern.empty()) pattern.push_back({"none", 0.0});
      int frame_index = 0;
      for (int i = 0; i < count; ++i) {
        const double d =
            count == 1 ? d_min
                       : d_min + (d_max - d_min) * static_cast<double>(i) /
                                     static_cast<double>(count - 1);
        for (int r = 0; r < repeats; ++r, ++frame_index) {
          const Orientation& o = pattern[static_cast<std::size_t>(frame_index) %
                                         pattern.size()];
          Vec3 normal{1.0, 0.0, 0.0};
          if (o.axis == "yaw") {
            normal = Vec3{std::cos(o.angle_rad), std::sin(o.angle_rad), 0.0};
          } else if (o.axis == "pitch") {
            normal = Vec3{std::cos(o.angle_rad), 0.0, -std::sin(o.angle_rad)};
          } else if (o.axis != "none") {
            throw ConfigError("wall pattern axis must be none|yaw|pitch");
          }
          config.walls.push_back(PlaneHessian::normalized(normal, d));
        }
      }
    }

    const auto& bf = j.at("bias_field");
    const double z_min = bf.value("z_min", 0.3);
    const double z_max = bf.value("z_max", 10.0);
    const int width = config.intrinsics.width;
    const int height = config.intrinsics.height;
    if (bf.contains("random")) {
      const auto& r = bf.at("random");
      BiasFieldRanges ranges;
      ranges.base_a = r.value("base_a", 0.0);
      ranges.amp_a = r.value("amp_a", 5e-4);
      ranges.base_b = r.value("base_b", 0.0);
      ranges.amp_b = r.value("amp_b", 2e-3);
      ranges.base_c = r.value("base_c", 0.0);
      ranges.amp_c = r.value("amp_c", 2e-2);
      GroundTruthBiasField truth = GroundTruthBiasField::random(
          width, height, ranges, r.value("seed", 0ULL), z_min, z_max);
      return SimSpec{std::move(config), std::move(truth)};
    }
    auto poly = [&](const char* key) {
      Biquadratic q;
      const auto& arr = bf.at(key);
      if (arr.size() != q.coeff.size()) {
        throw ConfigError("bias_field polynomials need 9 coefficients");
      }
      for (std::size_t i = 0; i < q.coeff.size(); ++i) {
        q.coeff[i] = arr[i].get<double>();
      }
      return q;
    };
    GroundTruthBiasField truth = GroundTruthBiasField::from_polynomials(
        width, height, poly("a"), poly("b"), poly("c"), z_min, z_max);
    return SimSpec{std::move(config), std::move(truth)};
  } catch (const json::exception& e) {
    throw ConfigError("bad sim config (" + std::string(e.what()) + "): " +
                      path.string());
  }
}

}  // namespace depthcal
