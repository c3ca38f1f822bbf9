#pragma once

#include "v2xsim/image.hpp"

#include <filesystem>
#include <utility>

namespace v2xsim {

/// 8-bit PNG. Gray images load as 1 channel, RGB as 3, RGBA drops alpha.
/// Values are mapped to/from [0,1] unless `raw` is set, in which case the
/// 0..255 integer values are kept (label images).
Image read_png(const std::filesystem::path& path, bool raw = false);
void write_png(const std::filesystem::path& path, const Image& image, bool raw = false);

/// 32-bit float PFM, 1 or 3 channels, little-endian.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& image);

/// Width and height from a PNG or PFM header, chosen by extension.
std::pair<int, int> image_dimensions(const std::filesystem::path& path);

}  // namespace v2xsim
