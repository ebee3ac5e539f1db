#include "crossview/image.hpp"

#include "crossview/error.hpp"

namespace crossview {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid image dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image Image::channel(int c) const {
  Image out(width_, height_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) out.data()[i] = data_[i * channels_ + c];
  return out;
}

}  // namespace crossview
