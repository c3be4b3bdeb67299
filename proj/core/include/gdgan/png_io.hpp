#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gdgan/image.hpp"

namespace gdgan {

/// Decodes a PNG to 8-bit gray (gray sources) or 8-bit RGB (color sources).
RawImage read_png(const std::filesystem::path& path);
RawImage decode_png(const std::vector<std::uint8_t>& bytes);

/// Encodes an 8-bit raster. The encoder writes no timestamps, so equal pixels give equal bytes.
std::vector<std::uint8_t> encode_png(const RawImage& image);
void write_png(const std::filesystem::path& path, const RawImage& image);

}  // namespace gdgan
