#pragma once

#include "comad/config.hpp"
#include "comad/counting.hpp"
#include "comad/feature_bank.hpp"
#include "comad/metrology.hpp"
#include "comad/region.hpp"
#include "comad/segmentation.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace comad {

inline constexpr std::uint32_t kModelVersion = 1;

/// Leave-one-out training self-scores and derived defaults.
struct TrainingStats {
    std::vector<double> d_g;
    std::vector<double> d_h;
    std::vector<double> d;
    double mean_d = 0.0;
    /// Default global threshold: max of the training self-scores.
    double threshold = 0.0;
    /// Spread (config.region.variance) of training areas per kept slot under
    /// the calibrated extraction.
    std::vector<double> area_spread;

    bool operator==(const TrainingStats&) const = default;
};

/// Everything recorded at training time. Immutable once built.
struct ComponentModel {
    std::uint32_t version = kModelVersion;
    Config config;
    ComponentPrototypes prototypes;
    ReservedComponents reserved;
    std::string reference_key;
    /// c* per kept slot (1 for plain OTSU and argmax).
    std::vector<double> scales;
    /// Per-candidate calibration scores per kept slot.
    std::vector<std::vector<double>> scale_scores;
    Normalizers normalizers;
    VectorBank global_bank;
    std::vector<AreaGroups> groups;
    std::vector<VectorBank> hist_banks;
    TrainingStats stats;
    std::vector<std::string> train_keys;

    std::size_t kept_count() const noexcept { return reserved.kept.size(); }
    /// Slot of a component id in the kept order, or -1.
    int slot_of(int component) const;
    bool counting_enabled(std::size_t slot) const;

    bool operator==(const ComponentModel&) const = default;
};

/// Thread-safe memo of segmentation fields, keyed by a hash of the image,
/// its key, the prototypes and the segmentation options.
class SegmentationCache {
public:
    explicit SegmentationCache(std::size_t max_entries = 0) : max_entries_(max_entries) {}

    std::shared_ptr<const SegmentationField> find(std::uint64_t key) const;
    void insert(std::uint64_t key, std::shared_ptr<const SegmentationField> field);
    std::size_t size() const;
    std::size_t hits() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::uint64_t, std::shared_ptr<const SegmentationField>> map_;
    std::vector<std::uint64_t> order_;
    std::size_t max_entries_;
    mutable std::size_t hits_ = 0;
};

struct TrainingImage {
    std::string key;
    Image image;
};

/// Runs the full training pipeline. Images are resized to image_size.
ComponentModel train(std::span<const TrainingImage> images, const Config& cfg, SegmentationCache* cache = nullptr);

/// Trains on `<root>/train/good/*.png` when present, else on `<root>/*.png`.
ComponentModel train_from_directory(const std::filesystem::path& root, const Config& cfg, SegmentationCache* cache = nullptr);

/// Per-image intermediate results of the scoring pipeline.
struct ImageAnalysis {
    std::string key;
    Image image;
    std::shared_ptr<const SegmentationField> seg;
    std::vector<RegionMask> masks;              // per kept slot
    std::vector<ComponentFeatures> features;    // raw, per kept slot
    std::vector<std::vector<ConnectedRegion>> regions;
    std::vector<CountHistogram> histograms;
};

/// Resizes to the square pipeline resolution.
Image to_pipeline_size(const Image& img, int size);

std::unique_ptr<FeatureExtractor> model_extractor(const Config& cfg);
SegmentOptions segment_options(const Config& cfg);

/// Segmentation with the model's prototypes; `img` must already be at the
/// pipeline resolution.
std::shared_ptr<const SegmentationField> segment_with_model(const ComponentModel& model, const Image& img, const std::string& key,
                                                            SegmentationCache* cache = nullptr);

/// Resizes, segments, extracts regions, features and count histograms.
ImageAnalysis analyze(const ComponentModel& model, const Image& img, const std::string& key, SegmentationCache* cache = nullptr);

struct ComponentReport {
    int component = -1;
    int slot = 0;
    double area = 0.0;
    double color = 0.0;
    double area_norm = 0.0;
    double color_norm = 0.0;
    bool empty = false;
    std::size_t regions = 0;
    std::vector<double> histogram;
    /// Weighted geometric/colour deviation (the attribution).
    double contribution = 0.0;
    /// Counting term of this component (0 when disabled).
    double counting = 0.0;
    double weight = 1.0;
    double threshold = 0.0; // +inf when unset
    bool over_threshold = false;
};

struct ClassifiedAnomaly {
    /// Component id, or -1 for background.
    int component = -1;
    double peak = 0.0;
    /// Peak score after masking (0 for background under ignore_background).
    double score = 0.0;
    int y = 0;
    int x = 0;
};

struct AnomalyReport {
    std::string image_id;
    double d_g = 0.0;
    /// D_G with all weights at 1; unaffected by policy.
    double d_g_raw = 0.0;
    double d_h = 0.0;
    double alpha = 0.5;
    double d = 0.0;
    double threshold = 0.0;
    bool anomalous = false;
    /// Components whose contribution exceeded their threshold.
    std::vector<int> flagged;
    /// Sorted by contribution, descending.
    std::vector<Attribution> attributions;
    std::vector<ComponentReport> components;
    std::optional<ClassifiedAnomaly> classified;
    std::optional<double> external_score;
    std::optional<double> combined_score;
};

/// Scores an analysis. `exclude` removes one training row from both banks
/// (leave-one-out self-scoring).
AnomalyReport score_analysis(const ComponentModel& model, const ImageAnalysis& a, const PolicyConfig& policy,
                             std::optional<std::size_t> exclude = std::nullopt);

AnomalyReport score(const ComponentModel& model, const Image& img, const std::string& key, const PolicyConfig& policy,
                    SegmentationCache* cache = nullptr);

/// Decision rule: D > T or some component contribution > t_k.
void apply_decision(AnomalyReport& report, const ComponentModel& model, const PolicyConfig& policy);

enum class EnsembleMode { Add, NormalizedAdd };

std::string_view to_string(EnsembleMode m);
EnsembleMode parse_ensemble_mode(std::string_view s);

/// add: d + external. normalized_add: d / d_mean + external / external_mean.
double ensemble(double d, double external, EnsembleMode mode, double d_mean = 1.0, double external_mean = 1.0);

/// Peak pixel of `anomaly_map` (first in raster order) labelled with the
/// argmax component there; non-kept winners are background.
ClassifiedAnomaly classify_anomaly(const ScalarField& anomaly_map, const SegmentationField& seg, const ComponentModel& model,
                                   const PolicyConfig& policy);

} // namespace comad
