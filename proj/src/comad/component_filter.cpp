#include "comad/component_filter.hpp"

#include "comad/error.hpp"
#include "comad/image.hpp"
#include "comad/region.hpp"

#include <algorithm>
#include <sstream>

namespace comad {

std::vector<int> detect_noise(const SegmentationField& seg, const FilterOptions& opts) {
    std::vector<int> noise;
    for (int k = 0; k < seg.k(); ++k) {
        const ScalarField smoothed = mean_filter(seg.channel(k), opts.mean_filter_size);
        const auto vals = smoothed.values();
        const double peak = *std::max_element(vals.begin(), vals.end());
        if (peak < opts.noise_max_threshold) {
            noise.push_back(k);
        }
    }
    return noise;
}

int covered_corners(const SegmentationField& seg, int channel, const FilterOptions& opts) {
    const ScalarField field = seg.channel(channel);
    double tau = 0.0;
    try {
        tau = otsu(field);
    } catch (const DegenerateInput&) {
        return 0;
    }
    const RegionMask fg = threshold_mask(field, tau, channel);
    const int h = seg.height();
    const int w = seg.width();
    const int wy = std::min(opts.corner_window, h);
    const int wx = std::min(opts.corner_window, w);
    const int origins[4][2] = {{0, 0}, {0, w - wx}, {h - wy, 0}, {h - wy, w - wx}};
    int covered = 0;
    for (const auto& o : origins) {
        int count = 0;
        for (int y = o[0]; y < o[0] + wy; ++y) {
            for (int x = o[1]; x < o[1] + wx; ++x) {
                count += fg.at(y, x) ? 1 : 0;
            }
        }
        if (2 * count > wy * wx) {
            ++covered;
        }
    }
    return covered;
}

std::vector<int> detect_background(const SegmentationField& seg, const FilterOptions& opts, const std::vector<int>& skip) {
    std::vector<int> background;
    for (int k = 0; k < seg.k(); ++k) {
        if (std::find(skip.begin(), skip.end(), k) != skip.end()) {
            continue;
        }
        if (covered_corners(seg, k, opts) >= opts.min_corners) {
            background.push_back(k);
        }
    }
    return background;
}

ReservedComponents select_core_components(const SegmentationField& seg, const FilterOptions& opts) {
    ReservedComponents rc;
    rc.noise = detect_noise(seg, opts);
    rc.background = detect_background(seg, opts, rc.noise);
    for (int k = 0; k < seg.k(); ++k) {
        const bool dropped = std::find(rc.noise.begin(), rc.noise.end(), k) != rc.noise.end() ||
                             std::find(rc.background.begin(), rc.background.end(), k) != rc.background.end();
        if (!dropped) {
            rc.kept.push_back(k);
        }
    }
    if (rc.kept.empty()) {
        std::ostringstream msg;
        msg << "no component survives filtering:";
        for (int k = 0; k < seg.k(); ++k) {
            const bool is_noise = std::find(rc.noise.begin(), rc.noise.end(), k) != rc.noise.end();
            msg << " [" << k << ": " << (is_noise ? "noise (filtered max < threshold)" : "background (covers corners)")
                << "]";
        }
        throw TrainingError(TrainingReason::AllComponentsFiltered, msg.str());
    }
    return rc;
}

} // namespace comad
