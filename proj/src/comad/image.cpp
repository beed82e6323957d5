#include "comad/image.hpp"

#include "comad/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace comad {

Image::Image(int height, int width, Rgb fill) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
        throw InvalidArgument("Image: dimensions must be positive");
    }
    data_.resize(pixel_count() * 3);
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        data_[i * 3] = fill.r;
        data_[i * 3 + 1] = fill.g;
        data_[i * 3 + 2] = fill.b;
    }
}

Image::Image(int height, int width, std::vector<std::uint8_t> rgb)
    : height_(height), width_(width), data_(std::move(rgb)) {
    if (height < 1 || width < 1) {
        throw InvalidArgument("Image: dimensions must be positive");
    }
    if (data_.size() != pixel_count() * 3) {
        throw InvalidArgument("Image: buffer size does not match dimensions");
    }
}

ScalarField::ScalarField(int height, int width, double fill)
    : height_(height), width_(width), values_(static_cast<std::size_t>(height) * width, fill) {
    if (height < 1 || width < 1) {
        throw InvalidArgument("ScalarField: dimensions must be positive");
    }
}

ScalarField::ScalarField(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height < 1 || width < 1) {
        throw InvalidArgument("ScalarField: dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(height) * width) {
        throw InvalidArgument("ScalarField: value count does not match dimensions");
    }
}

FeatureMap::FeatureMap(int rows, int cols, int dim)
    : rows_(rows), cols_(cols), dim_(dim), values_(static_cast<std::size_t>(rows) * cols * dim, 0.0f) {
    if (rows < 1 || cols < 1 || dim < 1) {
        throw InvalidArgument("FeatureMap: dimensions must be positive");
    }
}

FeatureMap::FeatureMap(int rows, int cols, int dim, std::vector<float> values)
    : rows_(rows), cols_(cols), dim_(dim), values_(std::move(values)) {
    if (rows < 1 || cols < 1 || dim < 1) {
        throw InvalidArgument("FeatureMap: dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(rows) * cols * dim) {
        throw InvalidArgument("FeatureMap: value count does not match dimensions");
    }
    for (float v : values_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("FeatureMap: non-finite value");
        }
    }
}

// ---------------------------------------------------------------------------
// sRGB -> CIELAB (D65)
// ---------------------------------------------------------------------------

namespace {

// IEC 61966-2-1 linear sRGB -> XYZ. The reference white is taken as the row
// sums (XYZ of linear (1,1,1)), which is D65 to the published precision and
// makes every gray map to a = b = 0.
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhite[3] = {
    kM[0][0] + kM[0][1] + kM[0][2],
    kM[1][0] + kM[1][1] + kM[1][2],
    kM[2][0] + kM[2][1] + kM[2][2],
};

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

const std::array<double, 256>& linear_table() {
    static const std::array<double, 256> table = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            t[i] = srgb_to_linear(i / 255.0);
        }
        return t;
    }();
    return table;
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

} // namespace

Lab rgb_to_lab(Rgb c) {
    const auto& lin = linear_table();
    const double r = lin[c.r];
    const double g = lin[c.g];
    const double b = lin[c.b];
    const double x = (kM[0][0] * r + kM[0][1] * g + kM[0][2] * b) / kWhite[0];
    const double y = (kM[1][0] * r + kM[1][1] * g + kM[1][2] * b) / kWhite[1];
    const double z = (kM[2][0] * r + kM[2][1] * g + kM[2][2] * b) / kWhite[2];
    const double fx = lab_f(x);
    const double fy = lab_f(y);
    const double fz = lab_f(z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const Image& img) {
    LabImage out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(y, x) = rgb_to_lab(img.at(y, x));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Filtering and resampling
// ---------------------------------------------------------------------------

ScalarField mean_filter(const ScalarField& field, int size) {
    if (size < 1 || size % 2 == 0) {
        throw InvalidArgument("mean_filter: size must be odd and >= 1, got " + std::to_string(size));
    }
    const int h = field.height();
    const int w = field.width();
    const int r = size / 2;
    // Separable: horizontal sums then vertical sums.
    std::vector<double> horiz(field.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int dx = -r; dx <= r; ++dx) {
                s += field.at(y, std::clamp(x + dx, 0, w - 1));
            }
            horiz[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    const double norm = 1.0 / (static_cast<double>(size) * size);
    ScalarField out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                s += horiz[static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1)) * w + x];
            }
            out.at(y, x) = s * norm;
        }
    }
    return out;
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> taps(int in, int out) {
    std::vector<Tap> t(out);
    for (int o = 0; o < out; ++o) {
        const double src = out == 1 ? 0.0 : static_cast<double>(o) * (in - 1) / (out - 1);
        int lo = static_cast<int>(std::floor(src));
        lo = std::clamp(lo, 0, in - 1);
        const int hi = std::min(lo + 1, in - 1);
        t[o] = {lo, hi, src - lo};
    }
    return t;
}

} // namespace

std::vector<double> bilinear_resize(std::span<const double> src, int in_h, int in_w, int channels, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1 || in_h < 1 || in_w < 1 || channels < 1) {
        throw InvalidArgument("bilinear_resize: dimensions must be positive");
    }
    if (src.size() != static_cast<std::size_t>(in_h) * in_w * channels) {
        throw InvalidArgument("bilinear_resize: buffer size mismatch");
    }
    std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * channels);
    if (in_h == out_h && in_w == out_w) {
        std::copy(src.begin(), src.end(), out.begin());
        return out;
    }
    const auto ty = taps(in_h, out_h);
    const auto tx = taps(in_w, out_w);
    const auto c = static_cast<std::size_t>(channels);
    for (int y = 0; y < out_h; ++y) {
        const auto [y0, y1, fy] = ty[y];
        for (int x = 0; x < out_w; ++x) {
            const auto [x0, x1, fx] = tx[x];
            const double* p00 = &src[(static_cast<std::size_t>(y0) * in_w + x0) * c];
            const double* p01 = &src[(static_cast<std::size_t>(y0) * in_w + x1) * c];
            const double* p10 = &src[(static_cast<std::size_t>(y1) * in_w + x0) * c];
            const double* p11 = &src[(static_cast<std::size_t>(y1) * in_w + x1) * c];
            double* o = &out[(static_cast<std::size_t>(y) * out_w + x) * c];
            for (std::size_t k = 0; k < c; ++k) {
                const double top = p00[k] + (p01[k] - p00[k]) * fx;
                const double bot = p10[k] + (p11[k] - p10[k]) * fx;
                o[k] = top + (bot - top) * fy;
            }
        }
    }
    return out;
}

ScalarField bilinear_resize(const ScalarField& field, int out_h, int out_w) {
    return ScalarField(out_h, out_w, bilinear_resize(field.values(), field.height(), field.width(), 1, out_h, out_w));
}

FeatureMap bilinear_resize(const FeatureMap& fmap, int out_h, int out_w) {
    std::vector<double> src(fmap.values().begin(), fmap.values().end());
    auto res = bilinear_resize(src, fmap.rows(), fmap.cols(), fmap.dim(), out_h, out_w);
    std::vector<float> vals(res.begin(), res.end());
    return FeatureMap(out_h, out_w, fmap.dim(), std::move(vals));
}

Image resize_image(const Image& img, int out_h, int out_w) {
    if (img.height() == out_h && img.width() == out_w) {
        return img;
    }
    std::vector<double> src(img.data().begin(), img.data().end());
    auto res = bilinear_resize(src, img.height(), img.width(), 3, out_h, out_w);
    std::vector<std::uint8_t> bytes(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) {
        bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(res[i]), 0L, 255L));
    }
    return Image(out_h, out_w, std::move(bytes));
}

} // namespace comad
