#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crossview {

/// Row-major, channel-interleaved raster of doubles.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c = 0) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y) + c]; }

  std::span<double> pixel(int x, int y) {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Single channel `c` as a one-channel image.
  Image channel(int c) const;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

}  // namespace crossview
