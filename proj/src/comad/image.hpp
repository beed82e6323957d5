#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace comad {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    // Lvalues only: Image::at returns a copy.
    Rgb& operator=(const Rgb&) & = default;
    bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB image, row-major, interleaved channels.
class Image {
public:
    Image() = default;
    Image(int height, int width, Rgb fill = {});
    Image(int height, int width, std::vector<std::uint8_t> rgb);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const noexcept { return data_.empty(); }

    Rgb at(int y, int x) const {
        const auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        return {p[0], p[1], p[2]};
    }
    void set(int y, int x, Rgb c) {
        auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> data_;
};

struct Lab {
    double l = 0;
    double a = 0;
    double b = 0;
};

class LabImage {
public:
    LabImage() = default;
    LabImage(int height, int width) : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width) {}

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const Lab& at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    Lab& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const Lab> data() const noexcept { return data_; }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<Lab> data_;
};

/// H x W real grid: soft membership of one component, or an anomaly map.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int height, int width, double fill = 0.0);
    ScalarField(int height, int width, std::vector<double> values);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }

    double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const ScalarField&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Dense per-patch descriptor grid, rows x cols x dim, channel fastest.
/// Stored as float32 so the on-disk format round-trips bit-exactly.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int rows, int cols, int dim);
    FeatureMap(int rows, int cols, int dim, std::vector<float> values);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int dim() const noexcept { return dim_; }
    std::size_t patch_count() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }

    std::span<const float> vec(std::size_t patch) const { return {values_.data() + patch * dim_, static_cast<std::size_t>(dim_)}; }
    std::span<float> vec(std::size_t patch) { return {values_.data() + patch * dim_, static_cast<std::size_t>(dim_)}; }
    std::span<const float> vec(int i, int j) const { return vec(static_cast<std::size_t>(i) * cols_ + j); }

    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }

    bool operator==(const FeatureMap&) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    int dim_ = 0;
    std::vector<float> values_;
};

LabImage rgb_to_lab(const Image& img);
Lab rgb_to_lab(Rgb c);

/// Box mean over a size x size neighbourhood, edge-replicated borders.
/// Throws InvalidArgument when size is even or < 1.
ScalarField mean_filter(const ScalarField& field, int size);

/// Corner-aligned bilinear interpolation of an interleaved H x W x C grid.
std::vector<double> bilinear_resize(std::span<const double> src, int in_h, int in_w, int channels, int out_h, int out_w);

ScalarField bilinear_resize(const ScalarField& field, int out_h, int out_w);
FeatureMap bilinear_resize(const FeatureMap& fmap, int out_h, int out_w);
/// Resamples an RGB image with rounding to nearest; identity when sizes match.
Image resize_image(const Image& img, int out_h, int out_w);

} // namespace comad
