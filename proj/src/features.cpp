#include "crossview/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crossview/error.hpp"

namespace crossview {

namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

void require_nonempty(const Image& image, const char* what) {
  if (image.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": empty image");
  }
}

}  // namespace

Image to_grayscale(const Image& image) {
  require_nonempty(image, "to_grayscale");
  if (image.channels() == 1) return image;
  if (image.channels() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "to_grayscale: expected 1, 3 or 4 channels");
  }
  Image out(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto p = image.pixel(x, y);
      out.at(x, y) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  }
  return out;
}

Image downsample_half(const Image& grid) {
  if (grid.width() < 2 || grid.height() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "downsample_half: dimensions must be >= 2");
  }
  const int c = grid.channels();
  Image out(grid.width() / 2, grid.height() / 2, c);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int k = 0; k < c; ++k) {
        out.at(x, y, k) = 0.25 * (grid.at(2 * x, 2 * y, k) + grid.at(2 * x + 1, 2 * y, k) +
                                  grid.at(2 * x, 2 * y + 1, k) + grid.at(2 * x + 1, 2 * y + 1, k));
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0.0)) return image;
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = image.width();
  const int h = image.height();
  const int c = image.channels();

  Image tmp(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * image.at(clamp_index(x + i, w), y, k);
        }
        tmp.at(x, y, k) = acc;
      }
    }
  }
  Image out(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(x, clamp_index(y + i, h), k);
        }
        out.at(x, y, k) = acc;
      }
    }
  }
  return out;
}

Image sobel_x(const Image& gray) {
  const int w = gray.width();
  const int h = gray.height();
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const int ym = clamp_index(y - 1, h);
    const int yp = clamp_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = clamp_index(x - 1, w);
      const int xp = clamp_index(x + 1, w);
      const double d = (gray.at(xp, ym) - gray.at(xm, ym)) +
                       2.0 * (gray.at(xp, y) - gray.at(xm, y)) +
                       (gray.at(xp, yp) - gray.at(xm, yp));
      out.at(x, y) = d / 8.0;
    }
  }
  return out;
}

Image sobel_y(const Image& gray) {
  const int w = gray.width();
  const int h = gray.height();
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const int ym = clamp_index(y - 1, h);
    const int yp = clamp_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = clamp_index(x - 1, w);
      const int xp = clamp_index(x + 1, w);
      const double d = (gray.at(xm, yp) - gray.at(xm, ym)) +
                       2.0 * (gray.at(x, yp) - gray.at(x, ym)) +
                       (gray.at(xp, yp) - gray.at(xp, ym));
      out.at(x, y) = d / 8.0;
    }
  }
  return out;
}

Image l2_normalize_per_pixel(Image map) {
  const int c = map.channels();
  std::vector<double>& data = map.data();
  for (std::size_t i = 0; i < map.pixel_count(); ++i) {
    double* p = data.data() + i * c;
    double sq = 0.0;
    for (int k = 0; k < c; ++k) sq += p[k] * p[k];
    const double norm = std::sqrt(sq);
    if (norm > kZeroNormThreshold) {
      for (int k = 0; k < c; ++k) p[k] /= norm;
    } else {
      for (int k = 0; k < c; ++k) p[k] = 0.0;
    }
  }
  return map;
}

const CameraModel& FeatureMap::camera() const {
  if (const auto* cam = std::get_if<CameraModel>(&frame)) return *cam;
  throw Error(ErrorCode::kInvalidArgument, "feature map is not a ground-view map");
}

const SatelliteFrame& FeatureMap::satellite() const {
  if (const auto* sat = std::get_if<SatelliteFrame>(&frame)) return *sat;
  throw Error(ErrorCode::kInvalidArgument, "feature map is not a satellite map");
}

Image Grad3Extractor::compute(const Image& level_image) const {
  const Image smooth = gaussian_blur(to_grayscale(level_image), 1.0);
  const Image gx = sobel_x(smooth);
  const Image gy = sobel_y(smooth);
  Image out(smooth.width(), smooth.height(), 3);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.at(x, y, 0) = smooth.at(x, y);
      out.at(x, y, 1) = gx.at(x, y);
      out.at(x, y, 2) = gy.at(x, y);
    }
  }
  return out;
}

Image Rgb3Extractor::compute(const Image& level_image) const {
  if (level_image.channels() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "rgb3 extractor requires a color image");
  }
  Image rgb(level_image.width(), level_image.height(), 3);
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    for (int k = 0; k < 3; ++k) {
      rgb.data()[i * 3 + k] = level_image.data()[i * level_image.channels() + k];
    }
  }
  return rgb;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name) {
  if (name == "grad3") return std::make_unique<Grad3Extractor>();
  if (name == "rgb3") return std::make_unique<Rgb3Extractor>();
  throw Error(ErrorCode::kInvalidArgument, "unknown feature extractor '" + name + "'");
}

const FeatureMap& FeaturePyramid::level(int l) const {
  if (l < 1 || l > kNumLevels) {
    throw Error(ErrorCode::kInvalidArgument, "feature level must be 1, 2 or 3");
  }
  return levels[l - 1];
}

FeaturePyramid extract_pyramid(const Image& image, const FeatureExtractor& extractor,
                               const FeatureFrame& frame) {
  const int coarsest = level_downsample_factor(1);
  if (image.width() / coarsest < 4 || image.height() / coarsest < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "image too small for a 3-level pyramid (need at least 32x32)");
  }
  FeaturePyramid pyramid;
  Image current = image;
  for (int l = kNumLevels; l >= 1; --l) {
    current = downsample_half(current);
    FeatureMap& map = pyramid.levels[l - 1];
    map.level = l;
    map.data = l2_normalize_per_pixel(extractor.compute(current));
    map.frame = std::visit([l](const auto& f) -> FeatureFrame { return f.at_level(l); }, frame);
  }
  return pyramid;
}

}  // namespace crossview
