#include "crossview/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "crossview/error.hpp"

namespace crossview {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, "no such file: " + path.string(), path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string(), path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- PNM -----------------------------------------------------------------

class PnmReader {
 public:
  PnmReader(const std::vector<unsigned char>& bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  Image decode() {
    const char kind = static_cast<char>(bytes_[1]);
    pos_ = 2;
    const bool ascii = kind == '2' || kind == '3';
    const int channels = (kind == '2' || kind == '5') ? 1 : 3;
    const int width = read_int();
    const int height = read_int();
    const int maxval = read_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
      throw Error(ErrorCode::kUnsupportedFormat, "invalid PNM header in " + name_, name_);
    }
    Image img(width, height, channels);
    const std::size_t count = img.data().size();
    const double scale = 1.0 / maxval;
    if (ascii) {
      for (std::size_t i = 0; i < count; ++i) img.data()[i] = read_int() * scale;
      return img;
    }
    ++pos_;  // single whitespace after maxval
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    if (pos_ + count * bytes_per > bytes_.size()) {
      throw Error(ErrorCode::kTruncatedFile, "truncated PNM data in " + name_, name_);
    }
    for (std::size_t i = 0; i < count; ++i) {
      unsigned v = bytes_[pos_];
      if (bytes_per == 2) v = (v << 8) | bytes_[pos_ + 1];
      pos_ += bytes_per;
      img.data()[i] = v * scale;
    }
    return img;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int read_int() {
    skip_space();
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorCode::kTruncatedFile, "truncated PNM file " + name_, name_);
    }
    if (!std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::kUnsupportedFormat, "malformed PNM file " + name_, name_);
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000'000) throw Error(ErrorCode::kUnsupportedFormat, "PNM value too large", name_);
    }
    return static_cast<int>(v);
  }

  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

// ---- PNG -----------------------------------------------------------------

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->pos + length > src->size) png_error(png, "truncated");
  std::memcpy(out, src->data + src->pos, length);
  src->pos += length;
}

struct PngDecoded {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> pixels;
  char error[128] = {0};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* out = static_cast<PngDecoded*>(png_get_error_ptr(png));
  std::snprintf(out->error, sizeof(out->error), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// Plain C-style body: nothing with a destructor lives across setjmp.
bool decode_png(const std::vector<unsigned char>& bytes, PngDecoded& out) {
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out, png_error_handler,
                                           png_warning_handler);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  png_bytep* rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    png_free(png, rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, png_read_memory);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const png_size_t stride = png_get_rowbytes(png, info);
  out.pixels.resize(stride * out.height);
  rows = static_cast<png_bytep*>(png_malloc(png, sizeof(png_bytep) * out.height));
  for (png_uint_32 y = 0; y < out.height; ++y) rows[y] = out.pixels.data() + y * stride;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_free(png, rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Image load_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  PngDecoded decoded;
  if (!decode_png(bytes, decoded)) {
    const std::string why = decoded.error;
    if (why.find("truncated") != std::string::npos || why.find("Read Error") != std::string::npos) {
      throw Error(ErrorCode::kTruncatedFile, "truncated PNG " + name, name);
    }
    throw Error(ErrorCode::kUnsupportedFormat, "cannot decode PNG " + name + ": " + why, name);
  }
  if (decoded.channels != 1 && decoded.channels != 3) {
    throw Error(ErrorCode::kUnsupportedFormat, "unsupported PNG channel layout in " + name, name);
  }
  Image img(static_cast<int>(decoded.width), static_cast<int>(decoded.height), decoded.channels);
  const std::size_t count = img.data().size();
  if (decoded.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = (decoded.pixels[2 * i] << 8) | decoded.pixels[2 * i + 1];
      img.data()[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) img.data()[i] = decoded.pixels[i] / 255.0;
  }
  return img;
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  const std::string name = path.string();
  if (bytes.size() < 2) throw Error(ErrorCode::kTruncatedFile, "truncated image file " + name, name);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes[0] == kPngSig[0]) {
    if (bytes.size() < 8) throw Error(ErrorCode::kTruncatedFile, "truncated PNG " + name, name);
    if (std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin())) return load_png(bytes, name);
  }
  if (bytes[0] == 'P' && bytes[1] >= '2' && bytes[1] <= '6' && bytes[1] != '4') {
    return PnmReader(bytes, name).decode();
  }
  throw Error(ErrorCode::kUnsupportedFormat, "unsupported image format: " + name, name);
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "save_png expects 1 or 3 channels");
  }
  std::vector<unsigned char> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string(), path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::kIoFailure, "PNG encoding failed for " + path.string(), path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, image.width(), image.height(), 8,
               image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(image.width()) * image.channels();
  for (int y = 0; y < image.height(); ++y) png_write_row(png, bytes.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void save_pnm(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "save_pnm expects 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string(), path.string());
  out << (image.channels() == 1 ? "P5" : "P6") << '\n'
      << image.width() << ' ' << image.height() << "\n255\n";
  for (double v : image.data()) out.put(static_cast<char>(to_byte(v)));
}

}  // namespace crossview
