#include "crossview/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "crossview/diagnostics.hpp"
#include "crossview/error.hpp"
#include "crossview/features.hpp"
#include "crossview/image_io.hpp"

namespace crossview {

using nlohmann::json;

namespace {

struct SatelliteData {
  FeaturePyramid pyramid;
};

QueryResult solve_query(const QuerySpec& query, const FeaturePyramid& sat_pyramid,
                        const FeatureExtractor& extractor, const LMConfig& lm) {
  const auto start = std::chrono::steady_clock::now();
  const Image ground = load_image(query.ground_path);
  const CameraModel cam = query.camera(ground.width(), ground.height());
  const FeaturePyramid ground_pyramid = extract_pyramid(ground, extractor, cam);
  const SolveTrace trace = solve_coarse_to_fine(query.init_pose, ground_pyramid, sat_pyramid, lm);
  const auto stop = std::chrono::steady_clock::now();

  QueryResult row;
  row.id = query.id;
  row.final_pose = trace.final_pose;
  row.iterations = static_cast<int>(trace.iterates.size());
  row.final_cost = trace.final_cost;
  row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  if (query.gt_pose) row.error = decompose_error(trace.final_pose, *query.gt_pose);
  return row;
}

int resolve_jobs(int requested) {
  if (const char* env = std::getenv("CROSSVIEW_LM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1, requested);
}

}  // namespace

SolveReport cmd_solve(const QueryManifest& manifest, const SolveOptions& options) {
  options.lm.validate();
  const auto extractor = make_extractor(options.extractor.empty() ? manifest.extractor : options.extractor);
  const Image satellite = load_image(manifest.satellite_path);
  const SatelliteFrame frame = manifest.satellite_frame(satellite.width(), satellite.height());
  const FeaturePyramid sat_pyramid = extract_pyramid(satellite, *extractor, frame);

  const std::size_t n = manifest.queries.size();
  std::vector<QueryResult> rows(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        rows[i] = solve_query(manifest.queries[i], sat_pyramid, *extractor, options.lm);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int jobs = options.deterministic ? 1 : std::min<int>(resolve_jobs(options.jobs), static_cast<int>(n));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  SolveReport report;
  report.rows = std::move(rows);
  attach_aggregate(report);
  return report;
}

SolveReport cmd_eval(const QueryManifest& manifest, const SolveOptions& options) {
  for (std::size_t i = 0; i < manifest.queries.size(); ++i) {
    if (!manifest.queries[i].gt_pose) {
      throw Error(ErrorCode::kGtRequired, "GT required for eval",
                  "queries[" + std::to_string(i) + "].gt_pose");
    }
  }
  return cmd_solve(manifest, options);
}

QueryManifest cmd_synth(const SynthOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + options.out_dir.string(), options.out_dir.string());

  TrialSetOptions trial_opts;
  trial_opts.style = options.style;
  trial_opts.init_radius_m = options.radius_m;
  trial_opts.init_angle_deg = options.angle_deg;
  const std::vector<Trial> trials = make_trial_set(options.n, options.seed, trial_opts);

  SceneSpec spec;
  spec.seed = options.seed;
  spec.style = options.style;
  SynthScene scene = build_scene(spec);

  QueryManifest manifest;
  manifest.satellite_path = options.out_dir / "satellite.png";
  manifest.meters_per_pixel = scene.sat_frame.alpha;
  manifest.satellite_center_px = Eigen::Vector2d{scene.sat_frame.u0, scene.sat_frame.v0};
  manifest.extractor = "rgb3";
  save_png(manifest.satellite_path, scene.satellite);

  const CameraModel& cam = scene.camera();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    scene.spec.gt_pose = trials[i].scene.gt_pose;
    const RenderedView view = render_ground_view(scene, options.supersample);
    char name[32];
    std::snprintf(name, sizeof(name), "ground_%04zu.png", i);
    QuerySpec q;
    char id[16];
    std::snprintf(id, sizeof(id), "q%04zu", i);
    q.id = id;
    q.ground_path = options.out_dir / name;
    q.fx = cam.fx;
    q.fy = cam.fy;
    q.cx = cam.cx;
    q.cy = cam.cy;
    q.camera_height_m = cam.height_m;
    q.init_pose = trials[i].init_pose;
    q.gt_pose = trials[i].scene.gt_pose;
    save_png(q.ground_path, view.image);
    manifest.queries.push_back(std::move(q));
  }
  save_manifest(manifest, options.out_dir / "manifest.json");
  return manifest;
}

json CheckReport::to_json() const {
  return {{"jacobian_max_rel_error", jacobian_max_rel_error},
          {"jacobian_max_rel_error_all_rows", jacobian_max_rel_error_all_rows},
          {"pixel_jacobian_max_rel_error", pixel_jacobian_max_rel_error},
          {"roundtrip_max_error_px", roundtrip_max_error_px},
          {"monotonicity_violations", monotonicity_violations},
          {"solves", solves}};
}

namespace {

// Jacobian and projection checks for one query at its linearization pose.
void check_query(const FeaturePyramid& ground, const FeaturePyramid& sat, const Pose3DoF& pose,
                 const CameraModel& cam, const SatelliteFrame& frame, SplitMix64& rng,
                 CheckReport& report) {
  for (int l = 1; l <= kNumLevels; ++l) {
    const LevelProblem problem(ground.level(l), sat.level(l));
    const JacobianCheck jc = check_residual_jacobian(pose, problem);
    report.jacobian_max_rel_error = std::max(report.jacobian_max_rel_error, jc.max_rel_error);
    report.jacobian_max_rel_error_all_rows =
        std::max(report.jacobian_max_rel_error_all_rows, jc.max_rel_error_all_rows);
  }
  int done = 0;
  for (int attempt = 0; attempt < 10000 && done < 100; ++attempt) {
    const double u = rng.uniform(0.0, cam.width - 1);
    const double v = rng.uniform(0.0, cam.height - 1);
    const GroundRay ray = backproject_ground_pixel(cam, u, v);
    if (!ray.valid || !camera_point_to_satellite(pose, frame, ray.camera_point()).valid) continue;
    report.pixel_jacobian_max_rel_error =
        std::max(report.pixel_jacobian_max_rel_error, check_pixel_jacobian(pose, cam, frame, u, v));
    report.roundtrip_max_error_px =
        std::max(report.roundtrip_max_error_px, check_projection_roundtrip(pose, cam, frame, u, v));
    ++done;
  }
}

}  // namespace

CheckReport cmd_check(std::uint64_t seed, const LMConfig& lm) {
  TrialSetOptions opts;
  opts.init_radius_m = 5.0;
  opts.init_angle_deg = 10.0;
  const std::vector<Trial> trials = make_trial_set(3, seed, opts);
  const Rgb3Extractor extractor;
  SplitMix64 rng(seed ^ 0x5EEDull);
  CheckReport report;
  for (const Trial& trial : trials) {
    const SynthScene scene = build_scene(trial.scene);
    const RenderedView view = render_ground_view(scene);
    const FeaturePyramid sat = extract_pyramid(scene.satellite, extractor, scene.sat_frame);
    const FeaturePyramid ground = extract_pyramid(view.image, extractor, scene.camera());
    check_query(ground, sat, trial.init_pose, scene.camera(), scene.sat_frame, rng, report);
    const SolveTrace trace = solve_coarse_to_fine(trial.init_pose, ground, sat, lm);
    report.monotonicity_violations += count_monotonicity_violations(trace);
    ++report.solves;
  }
  return report;
}

CheckReport cmd_check(const QueryManifest& manifest, const LMConfig& lm) {
  const auto extractor = make_extractor(manifest.extractor);
  const Image satellite = load_image(manifest.satellite_path);
  const SatelliteFrame frame = manifest.satellite_frame(satellite.width(), satellite.height());
  const FeaturePyramid sat = extract_pyramid(satellite, *extractor, frame);
  SplitMix64 rng(0x5EEDull);
  CheckReport report;
  const std::size_t n = std::min<std::size_t>(manifest.queries.size(), 5);
  for (std::size_t i = 0; i < n; ++i) {
    const QuerySpec& q = manifest.queries[i];
    const Image ground_img = load_image(q.ground_path);
    const CameraModel cam = q.camera(ground_img.width(), ground_img.height());
    const FeaturePyramid ground = extract_pyramid(ground_img, *extractor, cam);
    check_query(ground, sat, q.init_pose, cam, frame, rng, report);
    const SolveTrace trace = solve_coarse_to_fine(q.init_pose, ground, sat, lm);
    report.monotonicity_violations += count_monotonicity_violations(trace);
    ++report.solves;
  }
  return report;
}

namespace {

void print_error(std::ostream& err, const std::string& code, const std::string& message,
                 const std::string& field) {
  json doc = {{"error", {{"code", code}, {"message", message}, {"field", field}}}};
  err << doc.dump() << '\n';
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int l = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      level_downsample_factor(l);
      levels.push_back(l);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "invalid --levels entry '" + item + "'", "--levels");
    }
  }
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "--levels is empty", "--levels");
  return levels;
}

json summary_json(const SolveReport& report) {
  json doc = {{"queries", report.rows.size()}};
  if (report.aggregate) doc["aggregate"] = report_to_json(report)["aggregate"];
  return doc;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Refine a ground camera's 3-DoF pose against a satellite tile."};
  app.require_subcommand(1);

  std::string manifest_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed = 7;
  std::string levels = "1,2,3";
  int iters = 5;
  double lambda_init = 1e-2;
  int rounds = 1;
  bool deterministic = false;
  std::string report_format = "both";
  std::string extractor;

  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--levels", levels, "Comma-separated feature levels, coarse to fine");
    cmd->add_option("--iters", iters, "Max LM iterations per level");
    cmd->add_option("--lambda-init", lambda_init, "Initial damping");
    cmd->add_option("--rounds", rounds, "Coarse-to-fine sweeps");
  };

  auto* solve = app.add_subcommand("solve", "Localize every query of a manifest");
  auto* eval = app.add_subcommand("eval", "Localize and score against GT poses");
  for (auto* cmd : {solve, eval}) {
    cmd->add_option("--manifest", manifest_path, "Query manifest (JSON)")->required();
    cmd->add_option("--out", out_dir, "Report directory");
    cmd->add_option("--jobs", jobs, "Parallel queries (CROSSVIEW_LM_THREADS overrides)");
    cmd->add_flag("--deterministic", deterministic, "One worker, ignoring --jobs and CROSSVIEW_LM_THREADS");
    cmd->add_option("--report-format", report_format, "csv, json or both");
    cmd->add_option("--extractor", extractor, "Override the manifest's feature extractor");
    add_solver_flags(cmd);
  }

  SynthOptions synth_opts;
  std::string style = "noise";
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and manifest");
  synth->add_option("--n", synth_opts.n, "Number of queries");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--style", style, "noise, road-grid or blobs");
  synth->add_option("--radius", synth_opts.radius_m, "Init offset half-range (m)");
  synth->add_option("--angle", synth_opts.angle_deg, "Init heading half-range (deg)");
  synth->add_option("--supersample", synth_opts.supersample, "Sub-pixel rays per axis when rendering");
  synth->add_option("--out", out_dir, "Dataset directory");

  auto* check = app.add_subcommand("check", "Numerical self-checks");
  auto* check_manifest = check->add_option("--manifest", manifest_path, "Check a manifest instead of synthetic scenes");
  check->add_option("--seed", seed, "Synthetic scene seed");
  check->add_option("--out", out_dir, "Directory for check.json");
  add_solver_flags(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what(), "");
    return 1;
  }

  try {
    LMConfig lm;
    lm.levels = parse_levels(levels);
    lm.max_iters_per_level = iters;
    lm.lambda_init = lambda_init;
    lm.outer_rounds = rounds;
    lm.validate();

    if (solve->parsed() || eval->parsed()) {
      SolveOptions opts;
      opts.lm = lm;
      opts.jobs = deterministic ? 1 : jobs;
      opts.deterministic = deterministic;
      opts.extractor = extractor;
      const ReportFormat format = parse_report_format(report_format);
      const QueryManifest manifest = load_manifest(manifest_path);
      const SolveReport report = eval->parsed() ? cmd_eval(manifest, opts) : cmd_solve(manifest, opts);
      write_report(report, out_dir, format);
      out << summary_json(report).dump(2) << '\n';
    } else if (synth->parsed()) {
      synth_opts.seed = seed;
      synth_opts.style = parse_texture_style(style);
      synth_opts.out_dir = out_dir;
      const QueryManifest manifest = cmd_synth(synth_opts);
      out << json{{"manifest", (synth_opts.out_dir / "manifest.json").string()},
                  {"queries", manifest.queries.size()}}
                 .dump(2)
          << '\n';
    } else if (check->parsed()) {
      const CheckReport report =
          check_manifest->count() > 0 ? cmd_check(load_manifest(manifest_path), lm) : cmd_check(seed, lm);
      const std::string text = report.to_json().dump(2);
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      std::ofstream(std::filesystem::path(out_dir) / "check.json") << text << '\n';
      out << text << '\n';
    }
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.code())), e.what(), e.field());
    return 2;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what(), "");
    return 3;
  }
  return 0;
}

}  // namespace crossview
