#pragma once

#include <filesystem>
#include <string>

#include "bmdsr/image.hpp"

namespace bmdsr {

// 8-bit RGB PNG codec. Non-RGB inputs (gray, palette, alpha) are converted to
// RGB on read. Writing quantizes floats to 8 bits; reading dequantizes to
// [0,1] floats.
std::string encode_png(const Image& img);
Image decode_png(const std::string& bytes, const std::string& what = "png");

Image read_png(const std::filesystem::path& path);
// Atomic: encodes in memory, then temp-write + rename.
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace bmdsr
