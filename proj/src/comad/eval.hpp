#pragma once

#include "comad/dataset.hpp"
#include "comad/detector.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace comad {

/// Rank AUROC with average ranks for ties: P(anomalous > normal) + 0.5 P(=).
/// Throws InvalidArgument unless both labels occur.
double auroc(std::span<const double> scores, std::span<const char> anomalous);

struct EvalItem {
    std::string key;
    Image image;
    bool anomalous = false;
    std::string kind = "good";
    std::string category; // logical | structural | empty for normals
};

struct ImageRecord {
    std::string id;
    bool anomalous = false;
    std::string kind;
    std::string category;
    double d_g = 0.0;
    double d_h = 0.0;
    double d = 0.0;
    bool predicted = false;
};

struct KindResult {
    std::string kind;
    std::string category;
    std::size_t count = 0;
    double auroc = 0.0;
};

struct BenchmarkResult {
    std::vector<ImageRecord> records;
    std::size_t normals = 0;
    std::size_t anomalies = 0;
    double overall = 0.0;
    /// Each defect kind against all normals, in kind order.
    std::vector<KindResult> kinds;
    /// Pooled by category (logical, structural, ...) against all normals.
    std::map<std::string, double> categories;
};

/// Called after each scored image with (done, total). Returning false
/// cancels the run with a Cancelled error.
using EvalProgress = std::function<bool(std::size_t, std::size_t)>;

BenchmarkResult run_benchmark(const ComponentModel& model, const PolicyConfig& policy, std::span<const EvalItem> items,
                              SegmentationCache* cache = nullptr, const EvalProgress& progress = {});

/// Scores `<root>/test/**`. Throws DataError when the test split lacks
/// normals or anomalies.
BenchmarkResult run_benchmark(const ComponentModel& model, const PolicyConfig& policy, const Dataset& dataset,
                              SegmentationCache* cache = nullptr, const EvalProgress& progress = {});

/// AUROC table from precomputed records (used by the ablation report).
BenchmarkResult summarize(std::vector<ImageRecord> records);

/// One JSON object per line: id, label, kind, category, D_G, D_H, D, decision.
std::string records_to_jsonl(std::span<const ImageRecord> records);
std::string benchmark_to_json(const BenchmarkResult& r, bool include_records, int indent = -1);
/// Fixed-width human-readable table.
std::string format_table(const BenchmarkResult& r);

} // namespace comad
