#pragma once

#include "comad/image.hpp"
#include "comad/segmentation_field.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace comad {

/// Binary H x W mask for one component.
struct RegionMask {
    int height = 0;
    int width = 0;
    int component = -1;
    std::vector<std::uint8_t> bits;

    RegionMask() = default;
    RegionMask(int h, int w, int comp) : height(h), width(w), component(comp), bits(static_cast<std::size_t>(h) * w, 0) {}

    std::size_t area() const;
    bool at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    bool operator==(const RegionMask&) const = default;
};

// ---------------------------------------------------------------------------
// OTSU on [0,1] fields, 256 bins
// ---------------------------------------------------------------------------

/// Bin of a value in [0,1]: min(255, floor(v * 256)), values outside clamp.
int quantize_256(double v);

std::array<std::uint64_t, 256> histogram_256(std::span<const double> values);

/// Boundary t in 1..255 maximising the between-class variance of
/// {bins < t} vs {bins >= t}; ties resolve to the lowest t. The comparison is
/// done on exact integers. Throws DegenerateInput with < 2 occupied bins.
int otsu_bin(const std::array<std::uint64_t, 256>& hist);

/// Threshold tau = otsu_bin / 256; pixels with v >= tau are foreground.
double otsu(const ScalarField& field);
double otsu(std::span<const double> values);

// ---------------------------------------------------------------------------
// Region extraction
// ---------------------------------------------------------------------------

enum class RegionMethod { AdaptiveOtsu, Otsu, Argmax };
enum class VarianceMode { Relative, Raw };

std::string_view to_string(RegionMethod m);
RegionMethod parse_region_method(std::string_view s);
std::string_view to_string(VarianceMode m);
VarianceMode parse_variance_mode(std::string_view s);

inline const std::vector<double>& default_scale_candidates() {
    static const std::vector<double> c{1.0, 1.1, 1.2, 1.3, 1.4};
    return c;
}

/// Mask of v >= min(threshold, 1).
RegionMask threshold_mask(const ScalarField& field, double threshold, int component = -1);

struct ScaleCalibration {
    double scale = 1.0;
    /// Score per candidate (relative or raw variance of areas); +inf when
    /// every area is zero under relative mode.
    std::vector<double> scores;
    std::size_t images_used = 0;
};

/// Picks c* from `candidates` minimising the spread of training-set areas
/// obtained by binarising each field at min(c * otsu(field), 1). Ties go to
/// the smallest c. Degenerate fields are skipped with a warning; throws
/// DataError when all are degenerate.
ScaleCalibration calibrate_scale(std::span<const ScalarField> training_fields, std::span<const double> candidates,
                                 VarianceMode mode = VarianceMode::Relative);

/// Adaptive/plain OTSU extraction of one component map. A degenerate field
/// yields an empty mask and a warning.
RegionMask extract_region(const ScalarField& field, double scale, RegionMethod method, int component = -1);

/// Argmax extraction: pixel p belongs to kept component c iff c is the
/// argmax over all K channels at p (ties -> lowest id).
std::vector<RegionMask> extract_regions_argmax(const SegmentationField& seg, std::span<const int> kept_ids);

/// Spread statistic used by calibration, exposed for reporting.
double area_spread(std::span<const double> areas, VarianceMode mode);

} // namespace comad
