#pragma once

#include "comad/image.hpp"
#include "comad/segmentation_field.hpp"

#include <span>

namespace comad {

/// Colour for a component id (fixed palette, cycles after 8).
Rgb component_color(int component);

/// Argmax labels painted over the image at 55% opacity for `kept` ids;
/// other pixels are the image dimmed to 40%.
Image render_overlay(const Image& img, const SegmentationField& seg, std::span<const int> kept);

} // namespace comad
