#pragma once

#include "comad/crf.hpp"
#include "comad/feature_bank.hpp"
#include "comad/image.hpp"
#include "comad/segmentation_field.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace comad {

/// K cluster centres in feature space (row-major K x dim).
struct ComponentPrototypes {
    int k = 0;
    int dim = 0;
    std::vector<double> centers;

    std::span<const double> center(int i) const { return {centers.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
    bool operator==(const ComponentPrototypes&) const = default;
};

struct KMeansOptions {
    int max_iter = 300;
    double tol = 1e-6;
};

struct KMeansResult {
    ComponentPrototypes prototypes;
    std::vector<int> labels;
    /// Objective (sum of squared distances) after each assignment step.
    std::vector<double> objective_history;
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to
/// the point farthest from its assigned centre. Throws InvalidArgument when
/// there are fewer than k rows or fewer than k distinct rows.
KMeansResult kmeans(std::span<const double> data, int dim, int k, std::uint64_t seed, KMeansOptions opts = {});
KMeansResult kmeans(const MemoryBank& bank, int k, std::uint64_t seed, KMeansOptions opts = {});

/// Per patch: cosine similarity to every centre, softmax(sim / temperature).
/// A zero-norm feature vector gets uniform membership.
SegmentationField assign_soft(const FeatureMap& fmap, const ComponentPrototypes& protos, double temperature = 0.1);

struct SegmentOptions {
    double temperature = 0.1;
    bool crf_on = true;
    CrfParams crf;
};

/// extract -> assign_soft -> bilinear resize to image size -> optional CRF.
SegmentationField segment_image(const Image& img, std::string_view key, const FeatureExtractor& extractor,
                                const ComponentPrototypes& protos, const SegmentOptions& opts);

/// Index of the most probable component at each pixel (ties -> lowest id).
std::vector<int> argmax_labels(const SegmentationField& seg);

} // namespace comad
