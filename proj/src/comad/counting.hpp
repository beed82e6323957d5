#pragma once

#include "comad/metrology.hpp"
#include "comad/region.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace comad {

struct ConnectedRegion {
    std::size_t area = 0;
    int y0 = 0, x0 = 0, y1 = 0, x1 = 0; // inclusive bounding box
    int component = -1;
};

/// 8-connected labelling; regions smaller than min_area_frac * H * W are
/// dropped. Regions are returned in raster order of their first pixel.
std::vector<ConnectedRegion> connected_regions(const RegionMask& mask, double min_area_frac = 0.001);

/// -1 marks noise; clusters are numbered in ascending order of value.
struct DbscanResult {
    std::vector<int> labels;
    int clusters = 0;
};

/// DBSCAN on scalars. A point is core when at least `min_samples` points
/// (itself included) lie within |x - y| <= eps. Core points within eps chain
/// into clusters; a non-core point within eps of a core joins the cluster of
/// its nearest core (ties -> the smaller core value).
DbscanResult dbscan_1d(std::span<const double> values, double eps, int min_samples);

/// Area groups of one component: ascending centroids.
struct AreaGroups {
    std::vector<double> centroids;

    int count() const noexcept { return static_cast<int>(centroids.size()); }
    bool operator==(const AreaGroups&) const = default;
};

/// DBSCAN over pooled training region areas with eps = eps_frac * mean(area).
/// Each cluster becomes a group with centroid = mean member area; DBSCAN
/// noise is ignored. No areas -> zero groups.
AreaGroups fit_groups(std::span<const double> pooled_areas, double eps_frac = 0.10, int min_samples = 10);

struct CountHistogram {
    std::vector<double> counts;      // H
    std::vector<double> regularized; // H / n
};

/// Every region goes to the group with the nearest centroid (ties -> lower
/// centroid). Empty histogram when there are no groups.
CountHistogram count_histogram(std::span<const ConnectedRegion> regions, const AreaGroups& groups);

/// Mean l2 distance from `hist.regularized` to its k nearest training
/// histograms.
KnnResult histogram_distance(const CountHistogram& hist, const VectorBank& bank, int k,
                             std::optional<std::size_t> exclude = std::nullopt);

/// Sum over components of histogram_distance. Components with no groups or
/// with enabled[c] == false contribute nothing.
double counting_score(std::span<const CountHistogram> hists, std::span<const VectorBank> banks, int k,
                      std::span<const char> enabled = {}, std::optional<std::size_t> exclude = std::nullopt,
                      std::vector<double>* per_component = nullptr);

} // namespace comad
