#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/types.h>

namespace gdgan {

inline constexpr int kImageSize = 64;

/// 8-bit raster as decoded from disk; `channels` is 1, 3 or 4 (interleaved).
struct RawImage {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    bool empty() const { return height <= 0 || width <= 0 || pixels.empty(); }
};

/// Single-channel float raster, row-major.
struct FloatImage {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Luminance (ITU-R 601) conversion of a 1/3/4-channel raster to one float channel in [0,255].
FloatImage to_luminance(const RawImage& raw);

/// Bilinear resampling with half-pixel centers (align_corners = false); edges clamp.
FloatImage resize_bilinear(const FloatImage& src, int out_height, int out_width);

/// Resize to target×target then map [0,255] -> [-1,1]. Throws EmptyImage.
FloatImage preprocess(const RawImage& raw, int target = kImageSize);

/// Resize an already-normalized image; identity on 64×64 input.
FloatImage preprocess_normalized(const FloatImage& image, int target = kImageSize);

/// [-1,1] float image -> 8-bit grayscale raster (round to nearest).
RawImage quantize(const FloatImage& image);

/// A rank-4 batch [n, 1, 64, 64] of images in [-1, 1] with optional ids.
struct ImageBatch {
    torch::Tensor data;
    std::vector<std::string> ids;

    std::int64_t size() const { return data.defined() ? data.size(0) : 0; }

    /// Throws ShapeMismatch / BadArgument when the batch violates shape or range.
    void validate() const;

    static ImageBatch from_images(const std::vector<FloatImage>& images, std::vector<std::string> ids = {});
    FloatImage image(std::int64_t index) const;
};

}  // namespace gdgan
