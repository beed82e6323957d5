#pragma once

#include "comad/image.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace comad {

/// Seam between the pipeline and whatever produces dense patch features.
/// Implementations must be deterministic: same image, same key -> same map.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string name() const = 0;
    virtual int patch_stride() const = 0;
    /// `key` identifies the image (dataset-relative path); file-backed
    /// extractors use it to locate the precomputed map.
    virtual FeatureMap extract(const Image& img, std::string_view key) const = 0;
};

/// Handcrafted 7-d patch descriptor: mean L, a, b; std L, a, b; mean
/// gradient magnitude of L. No positional terms.
FeatureMap mock_extract(const Image& img, int stride = 8);

class MockExtractor final : public FeatureExtractor {
public:
    explicit MockExtractor(int stride = 8) : stride_(stride) {}
    std::string name() const override { return "mock"; }
    int patch_stride() const override { return stride_; }
    FeatureMap extract(const Image& img, std::string_view key) const override;

private:
    int stride_;
};

/// Reads "CFM1" files from `dir`: first `<dir>/<key without extension>.cfm`,
/// then `<dir>/<filename stem>.cfm`.
class FileExtractor final : public FeatureExtractor {
public:
    FileExtractor(std::filesystem::path dir, int stride) : dir_(std::move(dir)), stride_(stride) {}
    std::string name() const override { return "file"; }
    int patch_stride() const override { return stride_; }
    FeatureMap extract(const Image& img, std::string_view key) const override;

private:
    std::filesystem::path dir_;
    int stride_;
};

/// `kind` is "mock" or "file".
std::unique_ptr<FeatureExtractor> make_extractor(std::string_view kind, const std::filesystem::path& dir, int stride);

struct SampledFeatures {
    int dim = 0;
    std::vector<double> vectors;             // count x dim
    std::vector<std::size_t> source_indices; // flattened patch index per row

    std::size_t count() const noexcept { return source_indices.size(); }
    std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim, static_cast<std::size_t>(dim)}; }
};

/// Greedy farthest-point coreset of floor(ratio * I * J) patch vectors,
/// Euclidean metric, starting from the vector nearest the feature mean.
/// The seed only breaks exact distance ties.
SampledFeatures coreset_sample(const FeatureMap& fmap, double ratio, std::uint64_t seed);

struct MemoryBank {
    int dim = 0;
    std::vector<double> vectors;      // rows x dim
    std::vector<std::size_t> offsets; // first row of each image

    std::size_t rows() const noexcept { return dim == 0 ? 0 : vectors.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim, static_cast<std::size_t>(dim)}; }
};

MemoryBank build_memory_bank(std::span<const SampledFeatures> samples);

} // namespace comad
