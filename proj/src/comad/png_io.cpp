#include "comad/png_io.hpp"

#include "comad/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace comad {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

// Decodes with libpng's simplified API into the requested pixel format.
std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bytes, png_uint_32 format, int& h, int& w) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw DecodeError(DecodeReason::Corrupt, std::string("png: ") + image.message);
    }
    image.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError(DecodeReason::Corrupt, "png: " + msg);
    }
    h = static_cast<int>(image.height);
    w = static_cast<int>(image.width);
    return buf;
}

std::vector<std::uint8_t> encode(const std::uint8_t* pixels, int h, int w, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

} // namespace

Image decode_png(std::span<const std::uint8_t> bytes) {
    int h = 0;
    int w = 0;
    auto buf = decode(bytes, PNG_FORMAT_RGB, h, w);
    return Image(h, w, std::move(buf));
}

Image read_png(const std::filesystem::path& path) {
    try {
        return decode_png(slurp(path));
    } catch (const DecodeError& e) {
        throw DecodeError(e.reason(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    return encode(img.data().data(), img.height(), img.width(), PNG_FORMAT_RGB);
}

void write_png(const Image& img, const std::filesystem::path& path) {
    spill(path, encode_png(img));
}

ScalarField decode_png_gray(std::span<const std::uint8_t> bytes) {
    int h = 0;
    int w = 0;
    auto buf = decode(bytes, PNG_FORMAT_GRAY, h, w);
    std::vector<double> vals(buf.size());
    std::transform(buf.begin(), buf.end(), vals.begin(), [](std::uint8_t v) { return v / 255.0; });
    return ScalarField(h, w, std::move(vals));
}

ScalarField read_png_gray(const std::filesystem::path& path) {
    return decode_png_gray(slurp(path));
}

void write_png_gray(const ScalarField& field, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        buf[i] = static_cast<std::uint8_t>(std::clamp(std::lround(field[i] * 255.0), 0L, 255L));
    }
    spill(path, encode(buf.data(), field.height(), field.width(), PNG_FORMAT_GRAY));
}

} // namespace comad
