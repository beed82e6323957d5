#pragma once

#include "comad/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace comad {

/// Any PNG colour type is expanded to 8-bit RGB.
Image read_png(const std::filesystem::path& path);
Image decode_png(std::span<const std::uint8_t> bytes);

void write_png(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& img);

/// Reads a PNG as a single luminance channel scaled to [0,1].
ScalarField read_png_gray(const std::filesystem::path& path);
ScalarField decode_png_gray(std::span<const std::uint8_t> bytes);

/// Writes a binary or [0,1] field as an 8-bit grayscale PNG.
void write_png_gray(const ScalarField& field, const std::filesystem::path& path);

} // namespace comad
