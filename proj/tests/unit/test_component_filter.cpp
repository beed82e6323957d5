#include "catch_amalgamated.hpp"

#include "comad/component_filter.hpp"
#include "comad/error.hpp"

#include <algorithm>

using namespace comad;

namespace {

// 40x40 one-hot field: channel 0 a centred square, channel 1 isolated
// speckles, channel 2 everything else (touches all four corners).
SegmentationField scene() {
    SegmentationField seg(40, 40, 3);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * 40 + x;
            int l = 2;
            if (y >= 10 && y < 30 && x >= 10 && x < 30) {
                l = 0;
            } else if (y % 9 == 4 && x % 9 == 4) {
                l = 1;
            }
            seg.at(p, l) = 1.0;
        }
    }
    return seg;
}

} // namespace

TEST_CASE("noise components have a weak filtered peak", "[filter]") {
    const auto seg = scene();
    CHECK(detect_noise(seg) == std::vector<int>{1});
    FilterOptions loose;
    loose.noise_max_threshold = 0.005;
    CHECK(detect_noise(seg, loose).empty());
}

TEST_CASE("background covers the corners", "[filter]") {
    const auto seg = scene();
    CHECK(covered_corners(seg, 2) == 4);
    CHECK(covered_corners(seg, 0) == 0);
    CHECK(detect_background(seg, {}, {1}) == std::vector<int>{2});

    // A channel touching only two corners is not background.
    SegmentationField half(20, 20, 2);
    for (std::size_t p = 0; p < half.pixel_count(); ++p) {
        const bool left = p % 20 < 10;
        half.at(p, left ? 0 : 1) = 1.0;
    }
    CHECK(covered_corners(half, 0) == 2);
    CHECK(detect_background(half).empty());

    // Constant channels cover nothing.
    SegmentationField flat(10, 10, 2);
    for (std::size_t p = 0; p < flat.pixel_count(); ++p) {
        flat.at(p, 0) = 0.5;
        flat.at(p, 1) = 0.5;
    }
    CHECK(covered_corners(flat, 0) == 0);
}

TEST_CASE("core selection partitions the ids", "[filter]") {
    const auto seg = scene();
    const auto r = select_core_components(seg);
    CHECK(r.kept == std::vector<int>{0});
    CHECK(r.noise == std::vector<int>{1});
    CHECK(r.background == std::vector<int>{2});

    std::vector<int> all;
    for (const auto* v : {&r.kept, &r.noise, &r.background}) {
        all.insert(all.end(), v->begin(), v->end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<int>{0, 1, 2});
}

TEST_CASE("nothing kept is a training error", "[filter]") {
    SegmentationField seg(30, 30, 2);
    for (std::size_t p = 0; p < seg.pixel_count(); ++p) {
        const bool dot = (p / 30) % 7 == 3 && (p % 30) % 7 == 3;
        seg.at(p, dot ? 0 : 1) = 1.0;
    }
    try {
        select_core_components(seg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.reason() == TrainingReason::AllComponentsFiltered);
    }
}
