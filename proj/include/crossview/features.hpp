#pragma once

// Multi-scale, per-pixel L2-normalized feature pyramids.

#include <array>
#include <memory>
#include <string>
#include <variant>

#include "crossview/geometry.hpp"
#include "crossview/image.hpp"

namespace crossview {

constexpr int kNumLevels = 3;
/// Norms at or below this are treated as zero by l2_normalize_per_pixel.
constexpr double kZeroNormThreshold = 1e-12;

/// Luma 0.299 R + 0.587 G + 0.114 B for 3/4-channel input; 1-channel passes
/// through. Input values are expected in [0, 1].
Image to_grayscale(const Image& image);

/// 2x2 box average; output dims are floor(dim / 2).
Image downsample_half(const Image& grid);

/// Separable Gaussian with clamped borders, applied per channel.
Image gaussian_blur(const Image& image, double sigma);

/// Sobel derivatives of a one-channel image, scaled to intensity per pixel.
Image sobel_x(const Image& gray);
Image sobel_y(const Image& gray);

Image l2_normalize_per_pixel(Image map);

using FeatureFrame = std::variant<CameraModel, SatelliteFrame>;

struct FeatureMap {
  Image data;
  int level = 0;
  FeatureFrame frame;

  int width() const { return data.width(); }
  int height() const { return data.height(); }
  int channels() const { return data.channels(); }

  /// Throws kInvalidArgument if this is not a ground-view map.
  const CameraModel& camera() const;
  /// Throws kInvalidArgument if this is not a satellite map.
  const SatelliteFrame& satellite() const;
};

/// Per-level transform from a downsampled raster to raw (unnormalized)
/// feature channels. extract_pyramid normalizes the result.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual Image compute(const Image& level_image) const = 0;
};

/// Intensity plus Sobel x/y of the Gaussian-smoothed (sigma = 1) grayscale.
class Grad3Extractor final : public FeatureExtractor {
 public:
  std::string name() const override { return "grad3"; }
  Image compute(const Image& level_image) const override;
};

/// Color channels of the box-filtered level image, unsmoothed. The normalized
/// result is a pointwise function of the scene color, so it survives the
/// perspective warp between the satellite and the ground view; a pixel-space
/// blur would not, since one ground pixel spans meters of depth far away.
/// Requires 3-channel input.
class Rgb3Extractor final : public FeatureExtractor {
 public:
  std::string name() const override { return "rgb3"; }
  Image compute(const Image& level_image) const override;
};

/// "grad3" or "rgb3"; throws kInvalidArgument otherwise.
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& name);

/// Levels 1..3 at scales 1/8, 1/4, 1/2 of the input.
struct FeaturePyramid {
  std::array<FeatureMap, kNumLevels> levels;

  const FeatureMap& level(int l) const;
};

/// `frame` describes the full-resolution image; each level carries the frame
/// rescaled to its resolution. Throws if level 1 would be smaller than 4x4.
FeaturePyramid extract_pyramid(const Image& image, const FeatureExtractor& extractor,
                               const FeatureFrame& frame);

}  // namespace crossview
