#include "gdgan/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "gdgan/error.hpp"

namespace gdgan {

namespace {

RawImage finish_read(png_image& image, const std::string& what) {
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    RawImage out;
    out.height = static_cast<int>(image.height);
    out.width = static_cast<int>(image.width);
    out.channels = color ? 3 : 1;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        raise(ErrorKind::IoError, "failed to decode " + what + ": " + msg);
    }
    return out;
}

int png_format(int channels) {
    switch (channels) {
        case 1: return PNG_FORMAT_GRAY;
        case 2: return PNG_FORMAT_GA;
        case 3: return PNG_FORMAT_RGB;
        case 4: return PNG_FORMAT_RGBA;
        default: raise(ErrorKind::ShapeMismatch, "unsupported channel count");
    }
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        raise(ErrorKind::IoError, "cannot read " + path.string() + ": " + image.message);
    return finish_read(image, path.string());
}

RawImage decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        raise(ErrorKind::IoError, std::string("cannot decode PNG: ") + image.message);
    return finish_read(image, "buffer");
}

std::vector<std::uint8_t> encode_png(const RawImage& raw) {
    if (raw.empty()) raise(ErrorKind::EmptyImage, "cannot encode an empty image");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raw.width);
    image.height = static_cast<png_uint_32>(raw.height);
    image.format = static_cast<png_uint_32>(png_format(raw.channels));

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, raw.pixels.data(), 0, nullptr))
        raise(ErrorKind::IoError, std::string("PNG sizing failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.pixels.data(), 0, nullptr))
        raise(ErrorKind::IoError, std::string("PNG encoding failed: ") + image.message);
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
    const auto bytes = encode_png(image);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorKind::StoreWriteFailure, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) raise(ErrorKind::StoreWriteFailure, "short write to " + path.string());
}

}  // namespace gdgan
