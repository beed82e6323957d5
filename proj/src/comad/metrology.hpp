#pragma once

#include "comad/image.hpp"
#include "comad/region.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace comad {

/// Area (pixel count) and colour (mean b/a over the region) of one component.
struct ComponentFeatures {
    double area = 0.0;
    double color = 0.0;
    /// Set when the region was empty; area and colour are then 0.
    bool empty = false;
};

/// b/a uses a signed clamp on a: b / (sign(a) * max(|a|, eps)), sign(0) = +1.
ComponentFeatures component_features(const RegionMask& mask, const LabImage& lab, double eps = 1e-3);

/// Which metrological features enter the global vector.
enum class FeatureSet { Area, AreaColor };

std::string_view to_string(FeatureSet f);
FeatureSet parse_feature_set(std::string_view s);
inline int features_per_component(FeatureSet f) { return f == FeatureSet::Area ? 1 : 2; }

/// Training means per kept component (denominators of the mean scaling).
struct Normalizers {
    std::vector<double> mean_area;
    std::vector<double> mean_color;
    std::size_t n_train = 0;

    bool operator==(const Normalizers&) const = default;
};

/// `train[i][c]`: features of image i, kept component c. Throws
/// TrainingError(ZeroMeanFeature) when a used feature has zero mean.
Normalizers fit_normalizers(std::span<const std::vector<ComponentFeatures>> train, FeatureSet set = FeatureSet::AreaColor);

std::vector<ComponentFeatures> normalize(std::span<const ComponentFeatures> features, const Normalizers& norms);

/// Interleaved (A', Co') per component in kept order, or (A') only.
std::vector<double> build_global_vector(std::span<const ComponentFeatures> normalized, FeatureSet set = FeatureSet::AreaColor);

/// Row-major collection of equally sized vectors.
struct VectorBank {
    int dim = 0;
    std::vector<double> rows;

    std::size_t size() const noexcept { return dim == 0 ? 0 : rows.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {rows.data() + i * dim, static_cast<std::size_t>(dim)}; }
    void push(std::span<const double> v);

    bool operator==(const VectorBank&) const = default;
};

struct KnnResult {
    double score = 0.0;
    std::vector<std::size_t> neighbors; // ascending distance, ties by index
    std::vector<double> distances;
    std::size_t k_used = 0;
};

/// Mean of the k smallest (optionally per-dimension weighted) Euclidean
/// distances from `query` to bank rows. `exclude` drops one row (leave-one-
/// out). When fewer than k rows are available k shrinks, with a warning.
KnnResult knn_score(std::span<const double> query, const VectorBank& bank, int k,
                    std::span<const double> dim_weights = {}, std::optional<std::size_t> exclude = std::nullopt);

struct Attribution {
    int slot = 0;         // position in the kept order
    int component = -1;   // component id
    double contribution = 0.0;
};

/// Per-component contribution: sqrt(w_c * sum of squared deviations of the
/// component's entries from the neighbour mean). Sorted descending; the
/// squares sum to the weighted squared distance to the neighbour mean.
std::vector<Attribution> attribute(std::span<const double> query, const VectorBank& bank, std::span<const std::size_t> neighbors,
                                   int stride, std::span<const int> component_ids, std::span<const double> component_weights = {});

} // namespace comad
