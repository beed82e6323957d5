#include "comad/render.hpp"

#include "comad/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace comad {

Rgb component_color(int component) {
    static constexpr std::array<Rgb, 8> palette{{
        {230, 25, 75},
        {60, 180, 75},
        {255, 225, 25},
        {0, 130, 200},
        {245, 130, 48},
        {145, 30, 180},
        {70, 240, 240},
        {240, 50, 230},
    }};
    return palette[static_cast<std::size_t>(std::max(component, 0)) % palette.size()];
}

Image render_overlay(const Image& img, const SegmentationField& seg, std::span<const int> kept) {
    if (img.height() != seg.height() || img.width() != seg.width()) {
        throw InvalidArgument("render_overlay: image and segmentation sizes differ");
    }
    std::vector<char> is_kept(seg.k(), 0);
    for (int id : kept) {
        if (id >= 0 && id < seg.k()) {
            is_kept[id] = 1;
        }
    }
    Image out(img.height(), img.width());
    auto mix = [](std::uint8_t a, std::uint8_t b, double t) {
        return static_cast<std::uint8_t>(std::lround((1.0 - t) * a + t * b));
    };
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * img.width() + x;
            const auto px = seg.pixel(p);
            const int label = static_cast<int>(std::max_element(px.begin(), px.end()) - px.begin());
            const Rgb c = img.at(y, x);
            if (is_kept[label]) {
                const Rgb k = component_color(label);
                out.set(y, x, {mix(c.r, k.r, 0.55), mix(c.g, k.g, 0.55), mix(c.b, k.b, 0.55)});
            } else {
                out.set(y, x, {mix(0, c.r, 0.4), mix(0, c.g, 0.4), mix(0, c.b, 0.4)});
            }
        }
    }
    return out;
}

} // namespace comad
