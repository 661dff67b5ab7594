// License: Apache 2.0. See LICENSE file in root directory.
//
// depthcal — calibrate per-pixel depth-camera bias functions against a
// trusted reference plane, apply them, and evaluate the result.
//
//   depthcal simulate  --config sim.json --output dataset/
//   depthcal calibrate --manifest dataset/manifest.json --output camera.dcal
//   depthcal apply     --calibration camera.dcal --output out/ frame.pgm...
//   depthcal evaluate  --calibration camera.dcal --manifest dataset/manifest.json
//                      --mode local --output curves.csv

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "depthcal/calibration.hpp"
#include "depthcal/calibration_file.hpp"
#include "depthcal/dataset.hpp"
#include "depthcal/depth_image.hpp"
#include "depthcal/errors.hpp"
#include "depthcal/evaluation.hpp"
#include "depthcal/file_io.hpp"
#include "depthcal/simulator.hpp"

namespace {

namespace fs = std::filesystem;
using namespace depthcal;

struct CalibrateFlags {
  std::string manifest;
  std::string output;
  std::string format = "binary";
  double bin_width = 0.1;
  std::optional<int> bins;
  int min_pairs = 10;
  double max_range = 5.0;
  std::uint64_t seed = 0;
};

BinningConfig make_binning(const CalibrateFlags& flags) {
  const double first = 0.4;
  double last;
  if (flags.bins) {
    last = first + (*flags.bins - 1) * flags.bin_width;
  } else {
    last = std::min(flags.max_range, 5.0);
  }
  return BinningConfig::regular(first, last, flags.bin_width);
}

nlohmann::json report_to_json(const CalibrationReport& report) {
  nlohmann::json bins = nlohmann::json::array();
  for (const BinReport& b : report.bins) {
    bins.push_back({{"center", b.center},
                    {"pooled_count", b.pooled_count},
                    {"group_count", b.group_count},
                    {"mean_group_size",
                     b.group_count > 0 ? static_cast<double>(b.pooled_count) /
                                             static_cast<double>(b.group_count)
                                       : 0.0},
                    {"sigma", b.sigma},
                    {"fit_residual", b.fit_residual},
                    {"bessel_factor", b.bessel_factor},
                    {"used", b.used}});
  }
  return nlohmann::json{{"total_pairs", report.total_pairs},
                        {"valid_pixels", report.valid_pixels},
                        {"dropped_pixels", report.dropped_pixels},
                        {"bins", std::move(bins)}};
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  SimSpec spec = load_sim_spec(config_path);
  if (seed_override) spec.config.seed = *seed_override;
  const DatasetPaths paths =
      generate_dataset(spec.config, spec.truth, out_dir);
  std::printf("wrote %zu frames under %s\n", paths.frames.size(),
              paths.directory.string().c_str());
  std::printf("manifest: %s\n", paths.manifest.string().c_str());
  return 0;
}

int run_calibrate(const CalibrateFlags& flags) {
  RansacParams scan_params;
  scan_params.seed = flags.seed;
  const DatasetManifest manifest = load_manifest(flags.manifest, scan_params);

  std::vector<Observation> observations;
  observations.reserve(manifest.records.size());
  for (const FrameRecord& record : manifest.records) {
    observations.push_back(
        Observation{load_frame(record), record.plane_reference});
  }

  CalibrationOptions options;
  options.binning = make_binning(flags);
  options.max_range = flags.max_range;
  options.pixel_fit.min_pairs = flags.min_pairs;
  const CalibrationResult result =
      calibrate(observations, manifest.sensors.extrinsics,
                manifest.sensors.intrinsics, options);

  CalibrationData data;
  data.bias_map = result.bias_map;
  data.noise = result.noise;
  nlohmann::json centers = nlohmann::json::array();
  for (double k : options.binning.bin_centers) centers.push_back(k);
  data.provenance =
      nlohmann::json{
          {"dataset_hash", fnv1a64(read_file(flags.manifest))},
          {"manifest", fs::path(flags.manifest).filename().string()},
          {"bin_centers", std::move(centers)},
          {"bin_threshold", options.binning.threshold},
          {"max_range", options.max_range},
          {"min_pairs", options.pixel_fit.min_pairs}}
          .dump();

  if (flags.format == "json") {
    write_calibration_json(flags.output, data);
  } else {
    write_calibration_binary(flags.output, data);
  }
  const fs::path report_path = fs::path(flags.output).concat(".report.json");
  write_file_atomic(report_path,
                    report_to_json(result.report).dump(1, '\t') + "\n");

  std::printf("calibrated %lld/%lld pixels (%lld pairs), sigma(z) = %.3g z^2 %+.3g z %+.3g\n",
              static_cast<long long>(result.report.valid_pixels),
              static_cast<long long>(result.report.valid_pixels +
                                     result.report.dropped_pixels),
              static_cast<long long>(result.report.total_pairs), result.noise.a,
              result.noise.b, result.noise.c);
  std::printf("calibration: %s\nreport: %s\n", flags.output.c_str(),
              report_path.string().c_str());
  return 0;
}

int run_apply(const std::string& calibration_path, const std::string& out_dir,
              const std::vector<std::string>& inputs) {
  const CalibrationData data = read_calibration(calibration_path);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);
  for (const std::string& input : inputs) {
    const DepthFrame raw = read_depth_frame(input);
    const DepthFrame compensated = compensate_frame(raw, data.bias_map);
    const fs::path out = fs::path(out_dir) / fs::path(input).filename();
    write_depth_frame(out, compensated);
    std::printf("%s -> %s\n", input.c_str(), out.string().c_str());
  }
  return 0;
}

int run_evaluate(const std::string& calibration_path,
                 const std::string& manifest_path, const std::string& mode,
                 const std::string& output, std::uint64_t seed) {
  const CalibrationData data = read_calibration(calibration_path);
  RansacParams scan_params;
  scan_params.seed = seed;
  const DatasetManifest manifest = load_manifest(manifest_path, scan_params);

  std::vector<EvalRecord> records;
  records.reserve(manifest.records.size());
  for (const FrameRecord& record : manifest.records) {
    const DepthFrame raw = load_frame(record);
    const DepthFrame calibrated = compensate_frame(raw, data.bias_map);
    const PlaneHessian plane_cam =
        transform_plane(record.plane_reference, manifest.sensors.extrinsics);
    const auto mask =
        reference_inlier_mask(raw, plane_cam, manifest.sensors.intrinsics);
    records.push_back(
        mode == "local"
            ? evaluate_local_frame(raw, calibrated,
                                   manifest.sensors.intrinsics, mask)
            : evaluate_global_frame(raw, calibrated, plane_cam,
                                    manifest.sensors.intrinsics, mask));
  }
  const std::vector<EvalBucket> buckets = bucket_records(records);
  write_eval_csv(output, buckets);
  std::printf("wrote %zu buckets (%zu frames) to %s\n", buckets.size(),
              records.size(), output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthcal: per-pixel depth camera bias calibration"};
  app.require_subcommand(1);

  std::string sim_config, sim_output;
  std::optional<std::uint64_t> sim_seed;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic wall dataset with ground truth");
  simulate->add_option("--config", sim_config, "Simulation config (JSON)")
      ->required();
  simulate->add_option("--output", sim_output, "Output dataset directory")
      ->required();
  simulate->add_option("--seed", sim_seed, "Override the config RNG seed");

  CalibrateFlags cal;
  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate", "Estimate the noise model and per-pixel bias map");
  calibrate_cmd->add_option("--manifest", cal.manifest, "Dataset manifest JSON")
      ->required();
  calibrate_cmd->add_option("--output", cal.output, "Calibration file to write")
      ->required();
  calibrate_cmd->add_option("--format", cal.format, "binary or json")
      ->check(CLI::IsMember({"binary", "json"}));
  calibrate_cmd->add_option("--bin-width", cal.bin_width,
                            "Noise-bin spacing in meters (threshold = half)");
  calibrate_cmd->add_option("--bins", cal.bins,
                            "Number of noise bins (overrides the 5 m cap)");
  calibrate_cmd->add_option("--min-pairs", cal.min_pairs,
                            "Minimum pairs per pixel fit");
  calibrate_cmd->add_option("--max-range", cal.max_range,
                            "Maximum usable measured depth in meters");
  calibrate_cmd->add_option("--seed", cal.seed,
                            "RANSAC seed for scan-based plane records");

  std::string apply_calibration, apply_output;
  std::vector<std::string> apply_inputs;
  CLI::App* apply_cmd =
      app.add_subcommand("apply", "Compensate depth rasters with a calibration");
  apply_cmd->add_option("--calibration", apply_calibration, "Calibration file")
      ->required();
  apply_cmd->add_option("--output", apply_output, "Output directory")
      ->required();
  apply_cmd->add_option("inputs", apply_inputs, "Depth rasters (16-bit PGM)")
      ->required();

  std::string eval_calibration, eval_manifest, eval_mode = "local", eval_output;
  std::uint64_t eval_seed = 0;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Plane-error curves before and after compensation");
  evaluate_cmd
      ->add_option("--calibration", eval_calibration, "Calibration file")
      ->required();
  evaluate_cmd->add_option("--manifest", eval_manifest, "Dataset manifest JSON")
      ->required();
  evaluate_cmd->add_option("--mode", eval_mode, "local or global")
      ->check(CLI::IsMember({"local", "global"}));
  evaluate_cmd->add_option("--output", eval_output, "CSV path")->required();
  evaluate_cmd->add_option("--seed", eval_seed,
                           "RANSAC seed for scan-based plane records");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(sim_config, sim_output, sim_seed);
    if (calibrate_cmd->parsed()) return run_calibrate(cal);
    if (apply_cmd->parsed())
      return run_apply(apply_calibration, apply_output, apply_inputs);
    if (evaluate_cmd->parsed())
      return run_evaluate(eval_calibration, eval_manifest, eval_mode,
                          eval_output, eval_seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.name().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 2;
  }
  return 0;
}
