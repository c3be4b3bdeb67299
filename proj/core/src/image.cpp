#include "gdgan/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <torch/torch.h>

#include "gdgan/error.hpp"

namespace gdgan {

FloatImage to_luminance(const RawImage& raw) {
    if (raw.empty()) raise(ErrorKind::EmptyImage, "image has no pixels");
    const std::size_t n = static_cast<std::size_t>(raw.height) * raw.width;
    if (raw.pixels.size() != n * raw.channels)
        raise(ErrorKind::ShapeMismatch, "pixel buffer does not match height*width*channels");
    FloatImage out{raw.height, raw.width, std::vector<float>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = &raw.pixels[i * raw.channels];
        switch (raw.channels) {
            case 1:
            case 2:  // gray + alpha
                out.pixels[i] = p[0];
                break;
            case 3:
            case 4:
                out.pixels[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
                break;
            default:
                raise(ErrorKind::ShapeMismatch, "unsupported channel count " + std::to_string(raw.channels));
        }
    }
    return out;
}

FloatImage resize_bilinear(const FloatImage& src, int out_height, int out_width) {
    if (src.height <= 0 || src.width <= 0) raise(ErrorKind::EmptyImage, "cannot resize an empty image");
    if (src.height == out_height && src.width == out_width) return src;

    // Precompute per-axis source taps.
    struct Tap {
        int i0, i1;
        double f;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> t(out);
        const double scale = static_cast<double>(in) / out;
        for (int o = 0; o < out; ++o) {
            double s = (o + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(in - 1));
            const int i0 = static_cast<int>(std::floor(s));
            t[o] = {i0, std::min(i0 + 1, in - 1), s - i0};
        }
        return t;
    };
    const auto ty = taps(src.height, out_height);
    const auto tx = taps(src.width, out_width);

    FloatImage out{out_height, out_width, std::vector<float>(static_cast<std::size_t>(out_height) * out_width)};
    for (int y = 0; y < out_height; ++y) {
        const auto& a = ty[y];
        for (int x = 0; x < out_width; ++x) {
            const auto& b = tx[x];
            const double top = src.at(a.i0, b.i0) * (1.0 - b.f) + src.at(a.i0, b.i1) * b.f;
            const double bottom = src.at(a.i1, b.i0) * (1.0 - b.f) + src.at(a.i1, b.i1) * b.f;
            out.pixels[static_cast<std::size_t>(y) * out_width + x] =
                static_cast<float>(top * (1.0 - a.f) + bottom * a.f);
        }
    }
    return out;
}

FloatImage preprocess(const RawImage& raw, int target) {
    FloatImage img = resize_bilinear(to_luminance(raw), target, target);
    for (auto& v : img.pixels) v = static_cast<float>(v / 127.5 - 1.0);
    return img;
}

FloatImage preprocess_normalized(const FloatImage& image, int target) {
    FloatImage img = resize_bilinear(image, target, target);
    for (auto& v : img.pixels) v = std::clamp(v, -1.0f, 1.0f);
    return img;
}

RawImage quantize(const FloatImage& image) {
    RawImage out{image.height, image.width, 1, std::vector<std::uint8_t>(image.pixels.size())};
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const double v = std::clamp((static_cast<double>(image.pixels[i]) + 1.0) * 127.5, 0.0, 255.0);
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

void ImageBatch::validate() const {
    if (!data.defined()) raise(ErrorKind::ShapeMismatch, "image batch is undefined");
    if (data.dim() != 4 || data.size(1) != 1 || data.size(2) != kImageSize || data.size(3) != kImageSize)
        raise(ErrorKind::ShapeMismatch, "image batch must be [n, 1, 64, 64]");
    if (!ids.empty() && static_cast<std::int64_t>(ids.size()) != data.size(0))
        raise(ErrorKind::ShapeMismatch, "id list does not match batch size");
    if (data.numel() == 0) return;
    if (!torch::isfinite(data).all().item<bool>()) raise(ErrorKind::BadArgument, "image batch has non-finite values");
    if (data.abs().max().item<double>() > 1.0) raise(ErrorKind::BadArgument, "image batch values outside [-1, 1]");
}

ImageBatch ImageBatch::from_images(const std::vector<FloatImage>& images, std::vector<std::string> ids) {
    const auto n = static_cast<std::int64_t>(images.size());
    auto data = torch::empty({n, 1, kImageSize, kImageSize}, torch::kFloat32);
    float* dst = data.data_ptr<float>();
    constexpr std::size_t plane = kImageSize * kImageSize;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& img = images[i];
        if (img.height != kImageSize || img.width != kImageSize)
            raise(ErrorKind::ShapeMismatch, "image is not 64x64");
        std::memcpy(dst + i * plane, img.pixels.data(), plane * sizeof(float));
    }
    ImageBatch batch{data, std::move(ids)};
    batch.validate();
    return batch;
}

FloatImage ImageBatch::image(std::int64_t index) const {
    auto t = data[index][0].to(torch::kFloat32).contiguous();
    FloatImage out{kImageSize, kImageSize, std::vector<float>(kImageSize * kImageSize)};
    std::memcpy(out.pixels.data(), t.data_ptr<float>(), out.pixels.size() * sizeof(float));
    return out;
}

}  // namespace gdgan
