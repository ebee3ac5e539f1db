#include "crossview/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossview/error.hpp"

namespace crossview {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::string_view to_string(TextureStyle style) {
  switch (style) {
    case TextureStyle::kNoise: return "noise";
    case TextureStyle::kRoadGrid: return "road-grid";
    case TextureStyle::kBlobs: return "blobs";
  }
  return "unknown";
}

TextureStyle parse_texture_style(std::string_view name) {
  if (name == "noise") return TextureStyle::kNoise;
  if (name == "road-grid") return TextureStyle::kRoadGrid;
  if (name == "blobs") return TextureStyle::kBlobs;
  throw Error(ErrorCode::kInvalidArgument, "unknown texture style '" + std::string(name) + "'");
}

CameraModel default_synth_camera() {
  CameraModel cam;
  cam.width = 1024;
  cam.height = 256;
  cam.fx = 256.0;
  cam.fy = 256.0;
  cam.cx = (cam.width - 1) / 2.0;
  cam.cy = (cam.height - 1) / 2.0;
  cam.height_m = 1.65;
  return cam;
}

namespace {

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return p1 + 0.5 * t *
                  (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                  t * (3.0 * (p1 - p2) + p3 - p0)));
}

// Smooth value noise: Catmull-Rom interpolation of a Gaussian lattice with
// the given spacing (pixels).
std::vector<double> value_noise_2d(SplitMix64& rng, int size, int spacing) {
  const int n = size / spacing + 4;
  std::vector<double> lattice(static_cast<std::size_t>(n) * n);
  for (double& v : lattice) v = rng.normal();
  auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * n + i]; };
  // Separable: interpolate every lattice row along x, then the columns along y.
  std::vector<double> rows(static_cast<std::size_t>(n) * size);
  for (int j = 0; j < n; ++j) {
    for (int x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / spacing + 1.0;
      const int i = static_cast<int>(gx);
      rows[static_cast<std::size_t>(j) * size + x] =
          catmull_rom(at(i - 1, j), at(i, j), at(i + 1, j), at(i + 2, j), gx - i);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / spacing + 1.0;
    const int j = static_cast<int>(gy);
    const double ty = gy - j;
    const double* r0 = &rows[static_cast<std::size_t>(j - 1) * size];
    const double* r1 = r0 + size;
    const double* r2 = r1 + size;
    const double* r3 = r2 + size;
    for (int x = 0; x < size; ++x) {
      out[static_cast<std::size_t>(y) * size + x] = catmull_rom(r0[x], r1[x], r2[x], r3[x], ty);
    }
  }
  return out;
}

std::vector<double> value_noise_1d(SplitMix64& rng, int size, int spacing) {
  const int n = size / spacing + 4;
  std::vector<double> lattice(n);
  for (double& v : lattice) v = rng.normal();
  std::vector<double> out(size);
  for (int x = 0; x < size; ++x) {
    const double g = static_cast<double>(x) / spacing + 1.0;
    const int i = static_cast<int>(g);
    out[x] = catmull_rom(lattice[i - 1], lattice[i], lattice[i + 1], lattice[i + 2], g - i);
  }
  return out;
}

// Rescales to mean 0.5 and the given standard deviation, clamped to [0, 1].
void normalize_channel(std::vector<double>& v, double stddev) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / v.size());
  for (double& x : v) x = std::clamp(0.5 + stddev * (x - mean) / (sd > 0 ? sd : 1.0), 0.0, 1.0);
}

struct Octave {
  int spacing;
  double amplitude;
};

// Structure at 13 m and 6 m. Finer octaves are foreshortened out of the far
// ground view at coarse levels and only add cross-view mismatch.
constexpr Octave kNoiseOctaves[] = {{64, 1.0}, {32, 0.7}};

std::vector<double> octave_noise(SplitMix64& rng, int size) {
  std::vector<double> sum(static_cast<std::size_t>(size) * size, 0.0);
  for (const Octave& o : kNoiseOctaves) {
    const std::vector<double> layer = value_noise_2d(rng, size, o.spacing);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.amplitude * layer[i];
  }
  return sum;
}

Image noise_texture(SplitMix64& rng, int size) {
  Image img(size, size, 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> ch = octave_noise(rng, size);
    normalize_channel(ch, 0.15);
    for (std::size_t i = 0; i < ch.size(); ++i) img.data()[i * 3 + c] = ch[i];
  }
  return img;
}

Image road_grid_texture(SplitMix64& rng, int size) {
  // Fields between roads vary across the roads (along v) only.
  Image img(size, size, 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> profile = value_noise_1d(rng, size, 24);
    const std::vector<double> fine = value_noise_1d(rng, size, 6);
    for (int i = 0; i < size; ++i) profile[i] += 0.5 * fine[i];
    normalize_channel(profile, 0.15);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) img.at(x, y, c) = profile[y];
    }
  }
  const double road[3] = {0.22, 0.22, 0.25};
  const double marking[3] = {0.9, 0.9, 0.85};
  auto paint_rows = [&](int v_lo, int v_hi) {
    for (int y = std::max(0, v_lo); y < std::min(size, v_hi); ++y) {
      for (int x = 0; x < size; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = road[c];
      }
    }
  };
  auto paint_cols = [&](int u_lo, int u_hi) {
    for (int y = 0; y < size; ++y) {
      for (int x = std::max(0, u_lo); x < std::min(size, u_hi); ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = road[c];
      }
    }
  };
  // Roads along u, every 10-25 m at 0.2 m/px, each 4-8 m wide with a
  // center marking.
  std::vector<int> centers;
  for (double v = rng.uniform(0.0, 60.0); v < size; v += rng.uniform(50.0, 125.0)) {
    const int half = static_cast<int>(rng.uniform(10.0, 20.0));
    const int c = static_cast<int>(v);
    paint_rows(c - half, c + half);
    centers.push_back(c);
  }
  // Sparse cross streets, 60-90 m apart.
  std::vector<int> cross;
  for (double u = rng.uniform(0.0, 300.0); u < size; u += rng.uniform(300.0, 450.0)) {
    const int half = static_cast<int>(rng.uniform(12.0, 18.0));
    paint_cols(static_cast<int>(u) - half, static_cast<int>(u) + half);
    cross.push_back(static_cast<int>(u));
  }
  for (int c : centers) {
    for (int y = std::max(0, c - 1); y < std::min(size, c + 1); ++y) {
      for (int x = 0; x < size; ++x) {
        for (int k = 0; k < 3; ++k) img.at(x, y, k) = marking[k];
      }
    }
  }
  return img;
}

Image blobs_texture(SplitMix64& rng, int size) {
  Image img(size, size, 3);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> ch = octave_noise(rng, size);
    normalize_channel(ch, 0.05);
    for (std::size_t i = 0; i < ch.size(); ++i) img.data()[i * 3 + c] = ch[i];
  }
  const int count = size * size / 1200;
  for (int b = 0; b < count; ++b) {
    const double cu = rng.uniform(0.0, size);
    const double cv = rng.uniform(0.0, size);
    const double radius = rng.uniform(5.0, 25.0);
    double color[3];
    for (double& col : color) col = rng.uniform(0.1, 0.9);
    const int r = static_cast<int>(std::ceil(2.5 * radius));
    for (int y = std::max(0, static_cast<int>(cv) - r); y < std::min(size, static_cast<int>(cv) + r); ++y) {
      for (int x = std::max(0, static_cast<int>(cu) - r); x < std::min(size, static_cast<int>(cu) + r); ++x) {
        const double d2 = ((x - cu) * (x - cu) + (y - cv) * (y - cv)) / (radius * radius);
        const double a = std::exp(-0.5 * d2 * d2);
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1 - a) * img.at(x, y, c) + a * color[c];
      }
    }
  }
  return img;
}

}  // namespace

Image make_satellite_texture(std::uint64_t seed, TextureStyle style, int size) {
  if (size < 32) throw Error(ErrorCode::kInvalidArgument, "satellite texture must be at least 32 px");
  SplitMix64 rng(seed);
  switch (style) {
    case TextureStyle::kNoise: return noise_texture(rng, size);
    case TextureStyle::kRoadGrid: return road_grid_texture(rng, size);
    case TextureStyle::kBlobs: return blobs_texture(rng, size);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown texture style");
}

SynthScene build_scene(const SceneSpec& spec) {
  spec.camera.validate();
  SynthScene scene;
  scene.spec = spec;
  if (spec.world_margin_px < 0) throw Error(ErrorCode::kInvalidArgument, "world margin must be >= 0");
  const int m = spec.world_margin_px;
  const int size = spec.satellite_size;
  scene.world = make_satellite_texture(spec.seed, spec.style, size + 2 * m);
  scene.world_frame = SatelliteFrame::centered(spec.alpha, size + 2 * m, size + 2 * m);
  scene.satellite = Image(size, size, scene.world.channels());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto src = scene.world.pixel(x + m, y + m);
      std::copy(src.begin(), src.end(), scene.satellite.pixel(x, y).begin());
    }
  }
  scene.sat_frame = SatelliteFrame::centered(spec.alpha, size, size);
  scene.sat_frame.validate();
  return scene;
}

std::size_t RenderedView::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

RenderedView render_ground_view(const Image& satellite, const SatelliteFrame& frame,
                                const CameraModel& cam, const Pose3DoF& pose,
                                std::span<const double> fill, int supersample) {
  if (supersample < 1) throw Error(ErrorCode::kInvalidArgument, "supersample must be >= 1");
  if (fill.size() != static_cast<std::size_t>(satellite.channels())) {
    throw Error(ErrorCode::kInvalidArgument, "fill value has the wrong channel count");
  }
  const int channels = satellite.channels();
  const PoseProjector projector(pose, frame);
  RenderedView view;
  view.image = Image(cam.width, cam.height, channels);
  view.mask.assign(static_cast<std::size_t>(cam.width) * cam.height, 0);
  std::vector<double> sample(channels), acc(channels);

  auto sample_ray = [&](double u, double v, std::span<double> out) {
    const Eigen::Vector3d ray{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
    bool hit = false;
    if (ray.y() > kHorizonEpsilon) {
      const double w = cam.height_m / ray.y();
      if (w * ray.norm() <= kMaxGroundRange) {
        const SatellitePixel p = projector.project(w * ray);
        if (p.valid) {
          // Inline bilinear blend; the renderer is the oracle side and stays
          // independent of the sampler module.
          const int x0 = std::min(static_cast<int>(p.u), satellite.width() - 2);
          const int y0 = std::min(static_cast<int>(p.v), satellite.height() - 2);
          const double a = p.u - x0;
          const double b = p.v - y0;
          for (int k = 0; k < channels; ++k) {
            out[k] = (1 - a) * (1 - b) * satellite.at(x0, y0, k) + a * (1 - b) * satellite.at(x0 + 1, y0, k) +
                     (1 - a) * b * satellite.at(x0, y0 + 1, k) + a * b * satellite.at(x0 + 1, y0 + 1, k);
          }
          hit = true;
        }
      }
    }
    if (!hit) std::copy(fill.begin(), fill.end(), out.begin());
    return hit;
  };

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      auto out = view.image.pixel(x, y);
      if (supersample == 1) {
        view.mask[static_cast<std::size_t>(y) * cam.width + x] = sample_ray(x, y, out) ? 1 : 0;
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int sy = 0; sy < supersample; ++sy) {
        for (int sx = 0; sx < supersample; ++sx) {
          const double u = x - 0.5 + (sx + 0.5) / supersample;
          const double v = y - 0.5 + (sy + 0.5) / supersample;
          sample_ray(u, v, sample);
          for (int k = 0; k < channels; ++k) acc[k] += sample[k];
        }
      }
      const double inv = 1.0 / (supersample * supersample);
      for (int k = 0; k < channels; ++k) out[k] = acc[k] * inv;
      view.mask[static_cast<std::size_t>(y) * cam.width + x] = sample_ray(x, y, sample) ? 1 : 0;
    }
  }
  return view;
}

RenderedView render_ground_view(const SynthScene& scene, int supersample) {
  const Image& sat = scene.world;
  std::vector<double> mean(sat.channels(), 0.0);
  for (std::size_t i = 0; i < sat.pixel_count(); ++i) {
    for (int k = 0; k < sat.channels(); ++k) mean[k] += sat.data()[i * sat.channels() + k];
  }
  for (double& m : mean) m /= static_cast<double>(sat.pixel_count());
  const CameraModel& cam = scene.camera();
  RenderedView view = render_ground_view(sat, scene.world_frame, cam, scene.gt_pose(), mean, supersample);
  // The mask reports the satellite tile, not the wider world.
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      view.mask[static_cast<std::size_t>(y) * cam.width + x] =
          ground_to_satellite(scene.gt_pose(), cam, scene.sat_frame, x, y).valid ? 1 : 0;
    }
  }
  if (view.valid_count() == 0) {
    throw Error(ErrorCode::kDegenerateView, "rendered view does not see the satellite tile");
  }
  return view;
}

std::vector<Trial> make_trial_set(int n, std::uint64_t seed, const TrialSetOptions& options) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "trial count must be >= 1");
  SplitMix64 rng(seed);
  std::vector<Trial> trials;
  trials.reserve(n);
  const double half_region = options.region_m / 2.0;
  const double heading_range = options.gt_heading_range_deg * kPi / 180.0;
  const double angle = options.init_angle_deg * kPi / 180.0;
  for (int i = 0; i < n; ++i) {
    Trial trial;
    trial.scene.seed = rng.next();
    trial.scene.style = options.style;
    const double cx = rng.uniform(-half_region, half_region);
    const double cz = rng.uniform(-half_region, half_region);
    const double heading = rng.uniform(-heading_range, heading_range);
    trial.scene.gt_pose = Pose3DoF::from_camera_center(cx, cz, heading);
    const double ox = rng.uniform(-options.init_radius_m, options.init_radius_m);
    const double oz = rng.uniform(-options.init_radius_m, options.init_radius_m);
    const double ot = rng.uniform(-angle, angle);
    trial.init_pose = trial.scene.gt_pose + Eigen::Vector3d{ox, oz, ot};
    trials.push_back(trial);
  }
  return trials;
}

}  // namespace crossview
