#pragma once

// Library entry points behind the `crossview` command-line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "crossview/manifest.hpp"
#include "crossview/report.hpp"
#include "crossview/solver.hpp"
#include "crossview/synth.hpp"
#include "json.hpp"

namespace crossview {

struct SolveOptions {
  LMConfig lm;
  int jobs = 1;
  bool deterministic = false;
  std::string extractor;  // empty: use the manifest's
};

/// Localizes every query; rows follow manifest order. Rows carry errors (and
/// the report an aggregate) when GT poses are present.
SolveReport cmd_solve(const QueryManifest& manifest, const SolveOptions& options);

/// As cmd_solve but every query must carry a GT pose (kGtRequired otherwise).
SolveReport cmd_eval(const QueryManifest& manifest, const SolveOptions& options);

struct SynthOptions {
  int n = 10;
  std::uint64_t seed = 7;
  TextureStyle style = TextureStyle::kNoise;
  double radius_m = 5.0;
  double angle_deg = 10.0;
  int supersample = 1;
  std::filesystem::path out_dir = "synth";
};

/// Writes satellite.png, ground_NNNN.png and manifest.json (with GT) into
/// out_dir. All queries share one tile textured from `seed`.
QueryManifest cmd_synth(const SynthOptions& options);

struct CheckReport {
  double jacobian_max_rel_error = 0.0;
  double jacobian_max_rel_error_all_rows = 0.0;
  double pixel_jacobian_max_rel_error = 0.0;
  double roundtrip_max_error_px = 0.0;
  int monotonicity_violations = 0;
  int solves = 0;

  nlohmann::json to_json() const;
};

/// Diagnostics on synthetic scenes generated from `seed`.
CheckReport cmd_check(std::uint64_t seed, const LMConfig& lm = {});
/// Diagnostics on a manifest's queries, linearized at their init poses.
CheckReport cmd_check(const QueryManifest& manifest, const LMConfig& lm = {});

/// Full command-line front end. Returns the process exit code; failures are
/// reported on `err` as {"error": {"code", "message", "field"}}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crossview
