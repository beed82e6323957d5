#pragma once

#include "comad/image.hpp"
#include "comad/region.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace comad {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Toy circle dataset
// ---------------------------------------------------------------------------

struct CircleSpec {
    int size = 256;
    double radius = 15.0;
    Rgb color{20, 20, 20};
    Rgb background{255, 255, 255};
    /// Minimum centre distance. 2r + 2 keeps discs apart under 8-connectivity.
    double min_center_distance = 32.0;
    int min_count = 2;
    int max_count = 13;
    int per_count = 100;
    std::uint64_t seed = 0;
};

struct CircleImage {
    Image image;
    RegionMask mask;
    int count = 0;
};

/// One image with `count` circles, fully determined by (spec, count, index).
CircleImage gen_circle_image(const CircleSpec& spec, int count, int index);

/// per_count images for every count in [min_count, max_count], grouped by count.
std::vector<CircleImage> gen_circle_dataset(const CircleSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic multi-component product
// ---------------------------------------------------------------------------

enum class ShapeKind { Circle, Rect };

struct Shape {
    ShapeKind kind = ShapeKind::Circle;
    int part = 0;
    double cy = 0, cx = 0;
    double ry = 0, rx = 0; // radius, or half extents
    Rgb color;
    bool contains(int y, int x) const;
};

/// Line segment drawn as a structural defect.
struct Stroke {
    double y0 = 0, x0 = 0, y1 = 0, x1 = 0;
    double width = 2.0;
    Rgb color{60, 60, 60};
};

struct PartSpec {
    std::string name;
    ShapeKind kind = ShapeKind::Circle;
    Rgb color;
    int count = 1;
    /// Nominal size: radius for circles, (ry, rx) half extents for rectangles.
    double ry = 10, rx = 10;
    double size_jitter = 1.0;
    /// Instance centres (cy, cx); `count` entries.
    std::vector<std::pair<double, double>> centers;
};

struct ProductSpec {
    int size = 224;
    Rgb background{210, 210, 210};
    int noise = 3;
    double position_jitter = 4.0;
    std::vector<PartSpec> parts;
    /// Free slot used by the extra-instance defect, (cy, cx) and the part added.
    std::pair<double, double> extra_slot{132.0, 58.0};
    int extra_part = 2;
    std::uint64_t seed = 0;
    int n_train = 50;
    int n_test_normal = 40;
    std::map<std::string, int> defects{{"missing", 15}, {"extra", 15}, {"color_swap", 15}, {"size_change", 15}};

    /// Red circle, two blue rectangles, three green dots in separate zones.
    static ProductSpec standard();
    void validate() const;
};

/// "logical" for missing / extra / color_swap / size_change, "structural"
/// for scratch.
std::string defect_category(const std::string& kind);

struct ProductImage {
    std::string key;
    std::string kind = "good";
    Image image;
    /// Ground truth per part.
    std::vector<RegionMask> part_masks;
    std::vector<int> counts;
    /// Pixels the defect may touch; empty mask for normals.
    RegionMask defect_region;
    /// The defect-free scene with the same noise, for defect images.
    Image base;
    std::vector<Shape> shapes;
};

struct ProductDataset {
    ProductSpec spec;
    std::vector<ProductImage> train;
    std::vector<ProductImage> test;
};

std::vector<Shape> sample_layout(const ProductSpec& spec, std::uint64_t seed);
/// Renders shapes and strokes over the background plus seeded pixel noise.
/// The noise depends only on `noise_seed`, never on the layout.
Image render_scene(const ProductSpec& spec, const std::vector<Shape>& shapes, const std::vector<Stroke>& strokes,
                   std::uint64_t noise_seed);
std::vector<RegionMask> part_masks(const ProductSpec& spec, const std::vector<Shape>& shapes);

ProductImage gen_product_normal(const ProductSpec& spec, std::uint64_t seed, std::string key = {});
/// Normal scene from `seed` with one defect of `kind` applied.
ProductImage gen_product_defect(const ProductSpec& spec, const std::string& kind, std::uint64_t seed, std::string key = {});
ProductDataset gen_product_dataset(const ProductSpec& spec);

/// Writes the MVTec layout (train/good, test/<kind>, ground_truth/<kind>)
/// plus kinds.json.
void write_product_dataset(const ProductDataset& ds, const std::filesystem::path& root);

/// Circle images in MVTec layout: count `normal_count` is normal, every
/// count in `anomalous_counts` becomes test/count_<n>. Masks under
/// ground_truth/.
void write_circle_dataset(const CircleSpec& spec, int normal_count, const std::vector<int>& anomalous_counts, int n_train,
                          int n_test, const std::filesystem::path& root);

} // namespace comad
