#pragma once

#include "comad/detector.hpp"

#include <span>
#include <string>

namespace comad {

/// AnomalyReport as one JSON object. Unset thresholds (+inf) become null.
std::string report_to_json(const AnomalyReport& report, int indent = -1);

/// Kept/dropped ids, calibration, normalisers, groups and training stats.
std::string model_summary_json(const ComponentModel& model, int indent = -1);

/// Run-length encoding of a binary mask: flattened [start, length] pairs of
/// row-major runs of ones.
std::vector<std::uint32_t> rle_encode(const RegionMask& mask);
RegionMask rle_decode(std::span<const std::uint32_t> runs, int height, int width, int component = -1);

/// {"height", "width", "masks": [{"component", "area", "regions", "rle"}]}
std::string masks_to_json(const ImageAnalysis& analysis, int indent = -1);

} // namespace comad
