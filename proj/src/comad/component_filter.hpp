#pragma once

#include "comad/segmentation_field.hpp"

#include <vector>

namespace comad {

struct FilterOptions {
    int mean_filter_size = 11;
    double noise_max_threshold = 0.5;
    /// Side of the square window probed at each image corner.
    int corner_window = 5;
    /// Background iff the OTSU foreground covers at least this many corners.
    int min_corners = 3;

    bool operator==(const FilterOptions&) const = default;
};

/// Component ids split into kept / noise / background. Disjoint, and their
/// union is {0..K-1}.
struct ReservedComponents {
    std::vector<int> kept;
    std::vector<int> noise;
    std::vector<int> background;

    bool operator==(const ReservedComponents&) const = default;
};

/// Id k is noise iff max over pixels of mean_filter(channel k) < threshold.
std::vector<int> detect_noise(const SegmentationField& seg, const FilterOptions& opts = {});

/// Number of corner windows more than half covered by the OTSU foreground of
/// `channel`; 0 for a degenerate (constant) channel.
int covered_corners(const SegmentationField& seg, int channel, const FilterOptions& opts = {});

/// Plain OTSU on each raw channel not listed in `skip`; background iff the
/// foreground covers >= min_corners corners.
std::vector<int> detect_background(const SegmentationField& seg, const FilterOptions& opts = {},
                                   const std::vector<int>& skip = {});

/// Noise first, then background among the survivors. Throws TrainingError
/// (AllComponentsFiltered) listing the reason per id when nothing is kept.
ReservedComponents select_core_components(const SegmentationField& seg, const FilterOptions& opts = {});

} // namespace comad
