#pragma once

// Query manifest: one satellite tile and the ground queries to localize
// against it. JSON schema (schema_version 1):
//
//   {
//     "schema_version": 1,
//     "satellite_path": "satellite.png",        // relative to the manifest
//     "meters_per_pixel": 0.2,
//     "satellite_center_px": [255.5, 255.5],    // optional, default center
//     "extractor": "rgb3",                      // optional, "rgb3" | "grad3"
//     "queries": [
//       {
//         "id": "q0000",                        // optional, default index
//         "ground_path": "ground_0000.png",
//         "intrinsics": {"fx": 256, "fy": 256, "cx": 511.5, "cy": 127.5},
//         "camera_height_m": 1.65,
//         "init_pose": {"dx_m": 0.0, "dz_m": 0.0, "theta_deg": 0.0},
//         "gt_pose": {"dx_m": 0.0, "dz_m": 0.0, "theta_deg": 0.0}   // optional
//       }
//     ]
//   }

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crossview/geometry.hpp"
#include "json.hpp"

namespace crossview {

constexpr int kManifestSchemaVersion = 1;

struct QuerySpec {
  std::string id;
  std::filesystem::path ground_path;  // resolved against the manifest dir
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double camera_height_m = 0.0;
  Pose3DoF init_pose;
  std::optional<Pose3DoF> gt_pose;

  /// Intrinsics sized to a ground image of width x height; validated.
  CameraModel camera(int width, int height) const;
};

struct QueryManifest {
  std::filesystem::path satellite_path;
  double meters_per_pixel = 0.0;
  std::optional<Eigen::Vector2d> satellite_center_px;
  std::string extractor = "rgb3";
  std::vector<QuerySpec> queries;

  bool has_ground_truth() const;
  /// Frame for a satellite raster of the given size.
  SatelliteFrame satellite_frame(int width, int height) const;
};

/// Errors: kFileNotFound, kMalformedJson, kSchemaViolation, kValueOutOfRange
/// (Error::field() carries the JSON path of the offending field).
QueryManifest load_manifest(const std::filesystem::path& path);
QueryManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Paths are written relative to `base_dir` when they live under it.
nlohmann::json manifest_to_json(const QueryManifest& manifest, const std::filesystem::path& base_dir);
void save_manifest(const QueryManifest& manifest, const std::filesystem::path& path);

}  // namespace crossview
