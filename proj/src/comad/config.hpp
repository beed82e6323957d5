#pragma once

#include "comad/component_filter.hpp"
#include "comad/crf.hpp"
#include "comad/metrology.hpp"
#include "comad/region.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace comad {

struct FeaturesConfig {
    std::string extractor = "mock"; // mock | file
    std::string dir;
    int stride = 8;
    double coreset_ratio = 0.01;

    bool operator==(const FeaturesConfig&) const = default;
};

struct SegmentationConfig {
    int k = 5;
    double temperature = 0.1;
    int max_iter = 300;
    double tol = 1e-6;
    bool crf_enabled = true;
    CrfParams crf;

    bool operator==(const SegmentationConfig&) const = default;
};

struct FilterConfig {
    FilterOptions options;
    /// "first" selects the lexicographically first training image; any other
    /// value names a training image key.
    std::string reference_image = "first";

    bool operator==(const FilterConfig&) const = default;
};

struct RegionConfig {
    RegionMethod method = RegionMethod::AdaptiveOtsu;
    std::vector<double> candidates = default_scale_candidates();
    VarianceMode variance = VarianceMode::Relative;

    bool operator==(const RegionConfig&) const = default;
};

struct MetrologyConfig {
    int k = 5;
    double color_eps = 1e-3;
    FeatureSet features = FeatureSet::AreaColor;
    /// Training self-scores exclude the scored image from the bank.
    bool leave_one_out = true;

    bool operator==(const MetrologyConfig&) const = default;
};

struct CountingConfig {
    bool enabled = true;
    double min_area_frac = 0.001;
    double eps_frac = 0.10;
    int min_samples = 10;
    int k = 5;
    /// Component ids whose counting term is left out of D_H.
    std::vector<int> disabled_components;

    bool operator==(const CountingConfig&) const = default;
};

/// Fully resolved run configuration. Snapshotted into every model file.
struct Config {
    std::uint64_t seed = 0;
    int image_size = 224;
    double alpha = 0.5;
    FeaturesConfig features;
    SegmentationConfig segmentation;
    FilterConfig filter;
    RegionConfig region;
    MetrologyConfig metrology;
    CountingConfig counting;

    void validate() const;
    bool operator==(const Config&) const = default;
};

/// Canonical JSON (sorted keys, nested objects).
std::string config_to_json(const Config& cfg, int indent = -1);

/// Merges `json_text` over `base`. Keys may be nested objects or dotted paths
/// ("segmentation.crf.enabled"). Unknown keys are rejected.
Config config_from_json(std::string_view json_text, const Config& base = {});

/// Applies one dotted-key override; `value_json` is a JSON literal
/// (e.g. "false", "7", "\"file\"").
void apply_override(Config& cfg, std::string_view dotted_key, std::string_view value_json);

/// Human-set decision policy. Lives outside the model.
struct PolicyConfig {
    std::map<int, double> weights;    // default 1
    std::map<int, double> thresholds; // default +inf
    std::optional<double> global_threshold;
    bool ignore_background = false;

    double weight(int component) const;
    double threshold(int component) const;
    void validate() const;
    bool operator==(const PolicyConfig&) const = default;
};

/// Accepts {"policy": {...}}, the bare inner object, or dotted keys
/// ("policy.weights.2": 0.5).
PolicyConfig policy_from_json(std::string_view json_text);
std::string policy_to_json(const PolicyConfig& policy, int indent = -1);

} // namespace comad
