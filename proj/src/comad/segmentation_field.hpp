#pragma once

#include "comad/error.hpp"
#include "comad/image.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace comad {

/// Per-pixel membership over K components, pixel-major (K values per pixel).
class SegmentationField {
public:
    SegmentationField() = default;
    SegmentationField(int height, int width, int k)
        : height_(height), width_(width), k_(k), values_(static_cast<std::size_t>(height) * width * k, 0.0) {
        if (height < 1 || width < 1 || k < 1) {
            throw InvalidArgument("SegmentationField: dimensions must be positive");
        }
    }
    SegmentationField(int height, int width, int k, std::vector<double> values)
        : height_(height), width_(width), k_(k), values_(std::move(values)) {
        if (height < 1 || width < 1 || k < 1) {
            throw InvalidArgument("SegmentationField: dimensions must be positive");
        }
        if (values_.size() != static_cast<std::size_t>(height) * width * k) {
            throw InvalidArgument("SegmentationField: value count does not match dimensions");
        }
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int k() const noexcept { return k_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    double at(std::size_t pixel, int label) const { return values_[pixel * k_ + label]; }
    double& at(std::size_t pixel, int label) { return values_[pixel * k_ + label]; }
    std::span<const double> pixel(std::size_t p) const { return {values_.data() + p * k_, static_cast<std::size_t>(k_)}; }
    std::span<double> pixel(std::size_t p) { return {values_.data() + p * k_, static_cast<std::size_t>(k_)}; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    ScalarField channel(int label) const {
        ScalarField out(height_, width_);
        for (std::size_t p = 0; p < pixel_count(); ++p) {
            out[p] = at(p, label);
        }
        return out;
    }

    bool operator==(const SegmentationField&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    int k_ = 0;
    std::vector<double> values_;
};

} // namespace comad
