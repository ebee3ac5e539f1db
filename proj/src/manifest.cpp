#include "crossview/manifest.hpp"

#include <cmath>
#include <fstream>

#include "crossview/error.hpp"

namespace crossview {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: missing field " + path + key,
                path + key);
  }
  return obj.at(key);
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: " + path + key + " must be a number",
                path + key);
  }
  return v.get<double>();
}

double positive(const json& obj, const std::string& key, const std::string& path) {
  const double v = number(obj, key, path);
  if (!(v > 0.0)) {
    throw Error(ErrorCode::kValueOutOfRange, "schema error: " + path + key + " must be > 0",
                path + key);
  }
  return v;
}

std::string string_field(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: " + path + key + " must be a string",
                path + key);
  }
  return v.get<std::string>();
}

Pose3DoF parse_pose(const json& obj, const std::string& path) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: " + path + " must be an object", path);
  }
  const std::string p = path + ".";
  return {number(obj, "dx_m", p), number(obj, "dz_m", p),
          number(obj, "theta_deg", p) * kPi / 180.0};
}

json pose_to_json(const Pose3DoF& pose) {
  return {{"dx_m", pose.dx()}, {"dz_m", pose.dz()}, {"theta_deg", pose.theta() * 180.0 / kPi}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p, const std::string& field) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    throw Error(ErrorCode::kFileNotFound, "referenced file not found: " + p.string() + " (" + field + ")",
                field);
  }
}

std::string relative_if_inside(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (base.empty()) return p.string();
  const auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.string();
}

}  // namespace

CameraModel QuerySpec::camera(int width, int height) const {
  CameraModel cam{fx, fy, cx, cy, camera_height_m, width, height};
  cam.validate();
  return cam;
}

bool QueryManifest::has_ground_truth() const {
  for (const QuerySpec& q : queries) {
    if (!q.gt_pose) return false;
  }
  return !queries.empty();
}

SatelliteFrame QueryManifest::satellite_frame(int width, int height) const {
  SatelliteFrame frame = SatelliteFrame::centered(meters_per_pixel, width, height);
  if (satellite_center_px) {
    frame.u0 = satellite_center_px->x();
    frame.v0 = satellite_center_px->y();
  }
  frame.validate();
  return frame;
}

QueryManifest parse_manifest(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kSchemaViolation, "schema error: manifest must be an object");
  const json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: unsupported schema_version", "schema_version");
  }
  QueryManifest m;
  m.satellite_path = resolve(base_dir, string_field(doc, "satellite_path", ""));
  require_file(m.satellite_path, "satellite_path");
  m.meters_per_pixel = positive(doc, "meters_per_pixel", "");
  if (doc.contains("satellite_center_px")) {
    const json& c = doc.at("satellite_center_px");
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
      throw Error(ErrorCode::kSchemaViolation, "schema error: satellite_center_px must be [u0, v0]",
                  "satellite_center_px");
    }
    m.satellite_center_px = Eigen::Vector2d{c[0].get<double>(), c[1].get<double>()};
  }
  if (doc.contains("extractor")) {
    m.extractor = string_field(doc, "extractor", "");
    if (m.extractor != "rgb3" && m.extractor != "grad3") {
      throw Error(ErrorCode::kSchemaViolation, "schema error: unknown extractor '" + m.extractor + "'",
                  "extractor");
    }
  }
  const json& queries = require(doc, "queries", "");
  if (!queries.is_array() || queries.empty()) {
    throw Error(ErrorCode::kSchemaViolation, "schema error: queries must be a non-empty array", "queries");
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const json& q = queries[i];
    const std::string path = "queries[" + std::to_string(i) + "].";
    if (!q.is_object()) {
      throw Error(ErrorCode::kSchemaViolation, "schema error: query must be an object", path);
    }
    QuerySpec spec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "q%04zu", i);
    spec.id = q.contains("id") ? string_field(q, "id", path) : std::string(buf);
    spec.ground_path = resolve(base_dir, string_field(q, "ground_path", path));
    require_file(spec.ground_path, path + "ground_path");
    const json& intr = require(q, "intrinsics", path);
    const std::string ip = path + "intrinsics.";
    spec.fx = positive(intr, "fx", ip);
    spec.fy = positive(intr, "fy", ip);
    spec.cx = number(intr, "cx", ip);
    spec.cy = number(intr, "cy", ip);
    spec.camera_height_m = positive(q, "camera_height_m", path);
    spec.init_pose = parse_pose(require(q, "init_pose", path), path + "init_pose");
    if (q.contains("gt_pose") && !q.at("gt_pose").is_null()) {
      spec.gt_pose = parse_pose(q.at("gt_pose"), path + "gt_pose");
    }
    m.queries.push_back(std::move(spec));
  }
  return m;
}

QueryManifest load_manifest(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "manifest not found: " + path.string(), path.string());
  }
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("malformed manifest JSON: ") + e.what(),
                path.string());
  }
  return parse_manifest(doc, path.parent_path());
}

json manifest_to_json(const QueryManifest& m, const std::filesystem::path& base_dir) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["satellite_path"] = relative_if_inside(m.satellite_path, base_dir);
  doc["meters_per_pixel"] = m.meters_per_pixel;
  if (m.satellite_center_px) {
    doc["satellite_center_px"] = {m.satellite_center_px->x(), m.satellite_center_px->y()};
  }
  doc["extractor"] = m.extractor;
  json queries = json::array();
  for (const QuerySpec& q : m.queries) {
    json jq;
    jq["id"] = q.id;
    jq["ground_path"] = relative_if_inside(q.ground_path, base_dir);
    jq["intrinsics"] = {{"fx", q.fx}, {"fy", q.fy}, {"cx", q.cx}, {"cy", q.cy}};
    jq["camera_height_m"] = q.camera_height_m;
    jq["init_pose"] = pose_to_json(q.init_pose);
    if (q.gt_pose) jq["gt_pose"] = pose_to_json(*q.gt_pose);
    queries.push_back(std::move(jq));
  }
  doc["queries"] = std::move(queries);
  return doc;
}

void save_manifest(const QueryManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string(), path.string());
  out << manifest_to_json(manifest, path.parent_path()).dump(2) << '\n';
}

}  // namespace crossview
