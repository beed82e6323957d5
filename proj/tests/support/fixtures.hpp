#pragma once

#include "comad/detector.hpp"
#include "comad/eval.hpp"
#include "comad/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixture {

/// Unique directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "comad");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// The standard three-part product with custom split sizes.
comad::ProductSpec product_spec(int n_train, int n_test_normal, int per_defect, std::uint64_t seed = 0);

std::vector<comad::TrainingImage> training_images(const comad::ProductDataset& ds);
std::vector<comad::EvalItem> eval_items(const comad::ProductDataset& ds);

/// A small product dataset and a model trained on it without the CRF, built
/// once per process.
struct SmallSetup {
    comad::ProductDataset dataset;
    comad::ComponentModel model;
};
const SmallSetup& small_setup();

/// Piecewise-constant image of `regions` axis-aligned blobs in distinct
/// colours over a background, plus uniform noise of +-noise. `labels`
/// receives the region index per pixel (0 = background).
comad::Image blob_image(std::mt19937_64& rng, int h, int w, int regions, int noise, std::vector<int>* labels = nullptr);

/// Memberships that favour the true label with random strength.
comad::SegmentationField noisy_field(std::mt19937_64& rng, const std::vector<int>& labels, int h, int w, int k);

/// Random normalised field.
comad::SegmentationField random_field(std::mt19937_64& rng, int h, int w, int k);

} // namespace fixture
