#pragma once

#include "comad/detector.hpp"
#include "comad/eval.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace comad {

/// A named set of dotted-key config overrides applied on top of a base config.
struct AblationVariant {
    std::string name;
    std::vector<std::pair<std::string, std::string>> overrides; // key, JSON literal
};

/// Baseline, CRF off, the three region-extraction methods and the two
/// metrological feature subsets.
std::vector<AblationVariant> standard_ablations();

struct AblationRow {
    std::string name;
    Config config;
    BenchmarkResult result;
    /// Training-area spread per kept slot under the variant's extraction.
    std::vector<double> area_spread;
    double mean_area_spread = 0.0;
    std::size_t kept = 0;
};

/// Trains and evaluates every variant. Variants that only differ after
/// segmentation share `cache` entries.
std::vector<AblationRow> run_ablation(std::span<const TrainingImage> train, std::span<const EvalItem> test, const Config& base,
                                      std::span<const AblationVariant> variants, SegmentationCache* cache = nullptr);

std::string ablation_table(std::span<const AblationRow> rows);
std::string ablation_to_json(std::span<const AblationRow> rows, int indent = -1);

} // namespace comad
