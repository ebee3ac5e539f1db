#pragma once

#include <filesystem>

#include "crossview/image.hpp"

namespace crossview {

/// Decodes PNG or binary/ASCII PGM/PPM (8- or 16-bit) into [0, 1]. Alpha is
/// dropped. Errors: kFileNotFound, kTruncatedFile (including empty files),
/// kUnsupportedFormat.
Image load_image(const std::filesystem::path& path);

/// 8-bit PNG, gray or RGB by channel count; values clamped to [0, 1].
void save_png(const std::filesystem::path& path, const Image& image);

/// 8-bit binary PGM (1 channel) or PPM (3 channels).
void save_pnm(const std::filesystem::path& path, const Image& image);

}  // namespace crossview
