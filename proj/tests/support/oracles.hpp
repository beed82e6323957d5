#pragma once

// Independent reference implementations. Deliberately naive: they share no
// code with the library beyond the plain data types.

#include "comad/crf.hpp"
#include "comad/image.hpp"
#include "comad/region.hpp"
#include "comad/segmentation_field.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

/// Exhaustive OTSU: tries every boundary t in 1..255 on the raw values and
/// minimises the within-class sum of squares, compared as exact rationals.
int otsu_scan(std::span<const double> values);

/// Mean of the k smallest weighted Euclidean distances, by sorting all
/// (distance, index) pairs.
double knn_full_sort(std::span<const double> query, const std::vector<std::vector<double>>& rows, int k,
                     std::span<const double> weights = {}, std::optional<std::size_t> exclude = std::nullopt);

/// O(n^2) DBSCAN on scalars: core points from explicit neighbourhood counts,
/// clusters as connected components of the core graph, border points to the
/// nearest core (ties to the smaller value). -1 is noise.
std::vector<int> dbscan_bruteforce(std::span<const double> values, double eps, int min_samples);

/// True when both labelings induce the same partition and the same noise set.
bool same_partition(std::span<const int> a, std::span<const int> b);

/// P(anomalous > normal) + 0.5 P(tie) by comparing every pair.
double auroc_pairwise(std::span<const double> scores, std::span<const char> anomalous);

/// Mean-field with the literal update Q_i(l) = exp(-U_i(l) - sum_{l' != l} m_i(l')) / Z
/// over all ordered pixel pairs.
comad::SegmentationField meanfield_double_loop(const comad::SegmentationField& seg, const comad::Image& img,
                                               const comad::CrfParams& prm);

/// 8-connected regions of at least `min_area` pixels, by BFS.
std::size_t flood_fill_count(const comad::RegionMask& mask, std::size_t min_area = 1);

/// Textbook sRGB (D65) -> CIELAB.
comad::Lab srgb_to_lab(comad::Rgb c);

/// Sum of squared distances of each point to its nearest centre.
double kmeans_objective(std::span<const double> data, int dim, std::span<const double> centers);

/// Minimum k-means objective over every assignment of the points to 2
/// clusters (centres = cluster means).
double kmeans2_bruteforce(std::span<const double> data, int dim);

} // namespace oracle
