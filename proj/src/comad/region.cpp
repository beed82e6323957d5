#include "comad/region.hpp"

#include "comad/error.hpp"
#include "comad/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace comad {

std::size_t RegionMask::area() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

int quantize_256(double v) {
    if (!(v > 0.0)) {
        return 0;
    }
    return std::min(255, static_cast<int>(std::floor(v * 256.0)));
}

std::array<std::uint64_t, 256> histogram_256(std::span<const double> values) {
    std::array<std::uint64_t, 256> hist{};
    for (double v : values) {
        ++hist[quantize_256(v)];
    }
    return hist;
}

namespace {

using u128 = unsigned __int128;

// (n0*s1 - n1*s0)^2 / (n0*n1) is N^2 times the between-class variance of the
// bin indices. Candidates are compared by cross multiplication; long double
// is the fallback when the products would overflow 128 bits.
struct Score {
    u128 num2 = 0;
    u128 den = 1;
    long double approx = -1.0L;
};

} // namespace

int otsu_bin(const std::array<std::uint64_t, 256>& hist) {
    std::uint64_t total = 0;
    std::uint64_t occupied = 0;
    for (auto h : hist) {
        total += h;
        occupied += h > 0;
    }
    if (occupied < 2) {
        throw DegenerateInput("otsu: field has fewer than two distinct quantized values");
    }
    std::uint64_t sum_all = 0;
    for (int b = 0; b < 256; ++b) {
        sum_all += hist[b] * static_cast<std::uint64_t>(b);
    }
    // Exact comparison is safe while num2 * den < 2^127.
    const bool exact = total <= (std::uint64_t{1} << 18);

    int best_t = -1;
    Score best;
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    for (int t = 1; t < 256; ++t) {
        n0 += hist[t - 1];
        s0 += hist[t - 1] * static_cast<std::uint64_t>(t - 1);
        const std::uint64_t n1 = total - n0;
        const std::uint64_t s1 = sum_all - s0;
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const long double a = static_cast<long double>(n0) * s1;
        const long double b = static_cast<long double>(n1) * s0;
        Score cur;
        if (exact) {
            const std::int64_t diff = static_cast<std::int64_t>(n0 * s1) - static_cast<std::int64_t>(n1 * s0);
            const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
            cur.num2 = mag * mag;
            cur.den = static_cast<u128>(n0) * n1;
        } else {
            cur.approx = (a - b) * (a - b) / (static_cast<long double>(n0) * n1);
        }
        bool better = false;
        if (best_t < 0) {
            better = true;
        } else if (exact) {
            better = cur.num2 * best.den > best.num2 * cur.den;
        } else {
            better = cur.approx > best.approx;
        }
        if (better) {
            best = cur;
            best_t = t;
        }
    }
    return best_t;
}

double otsu(std::span<const double> values) {
    return otsu_bin(histogram_256(values)) / 256.0;
}

double otsu(const ScalarField& field) {
    return otsu(field.values());
}

std::string_view to_string(RegionMethod m) {
    switch (m) {
        case RegionMethod::AdaptiveOtsu: return "adaptive_otsu";
        case RegionMethod::Otsu:         return "otsu";
        case RegionMethod::Argmax:       return "argmax";
    }
    return "adaptive_otsu";
}

RegionMethod parse_region_method(std::string_view s) {
    if (s == "adaptive_otsu") return RegionMethod::AdaptiveOtsu;
    if (s == "otsu") return RegionMethod::Otsu;
    if (s == "argmax") return RegionMethod::Argmax;
    throw InvalidArgument("unknown region method '" + std::string(s) + "'");
}

std::string_view to_string(VarianceMode m) {
    return m == VarianceMode::Relative ? "relative" : "raw";
}

VarianceMode parse_variance_mode(std::string_view s) {
    if (s == "relative") return VarianceMode::Relative;
    if (s == "raw") return VarianceMode::Raw;
    throw InvalidArgument("unknown variance mode '" + std::string(s) + "'");
}

RegionMask threshold_mask(const ScalarField& field, double threshold, int component) {
    const double thr = std::min(threshold, 1.0);
    RegionMask mask(field.height(), field.width(), component);
    for (std::size_t i = 0; i < field.size(); ++i) {
        mask.bits[i] = field[i] >= thr ? 1 : 0;
    }
    return mask;
}

double area_spread(std::span<const double> areas, VarianceMode mode) {
    if (areas.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    const double n = static_cast<double>(areas.size());
    const double mean = std::accumulate(areas.begin(), areas.end(), 0.0) / n;
    double var = 0.0;
    for (double a : areas) {
        var += (a - mean) * (a - mean);
    }
    var /= n;
    if (mode == VarianceMode::Raw) {
        return var;
    }
    if (mean == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return var / (mean * mean);
}

ScaleCalibration calibrate_scale(std::span<const ScalarField> training_fields, std::span<const double> candidates,
                                 VarianceMode mode) {
    if (candidates.empty()) {
        throw InvalidArgument("calibrate_scale: empty candidate set");
    }
    std::vector<double> taus;
    std::vector<const ScalarField*> usable;
    for (std::size_t i = 0; i < training_fields.size(); ++i) {
        try {
            taus.push_back(otsu(training_fields[i]));
            usable.push_back(&training_fields[i]);
        } catch (const DegenerateInput&) {
            log_warning("calibrate_scale: skipping degenerate training field #" + std::to_string(i));
        }
    }
    if (usable.empty()) {
        throw DataError("calibrate_scale: every training field is degenerate");
    }

    ScaleCalibration out;
    out.images_used = usable.size();
    double best = std::numeric_limits<double>::infinity();
    bool have = false;
    std::vector<double> areas(usable.size());
    for (double c : candidates) {
        for (std::size_t i = 0; i < usable.size(); ++i) {
            const double thr = std::min(c * taus[i], 1.0);
            const auto vals = usable[i]->values();
            areas[i] = static_cast<double>(std::count_if(vals.begin(), vals.end(), [thr](double v) { return v >= thr; }));
        }
        const double score = area_spread(areas, mode);
        out.scores.push_back(score);
        if (!have || score < best) {
            best = score;
            out.scale = c;
            have = true;
        }
    }
    return out;
}

RegionMask extract_region(const ScalarField& field, double scale, RegionMethod method, int component) {
    if (method == RegionMethod::Argmax) {
        throw InvalidArgument("extract_region: argmax needs the full segmentation field");
    }
    const double c = method == RegionMethod::Otsu ? 1.0 : scale;
    double tau = 0.0;
    try {
        tau = otsu(field);
    } catch (const DegenerateInput&) {
        log_warning("extract_region: degenerate map for component " + std::to_string(component) + ", using empty mask");
        return RegionMask(field.height(), field.width(), component);
    }
    return threshold_mask(field, c * tau, component);
}

std::vector<RegionMask> extract_regions_argmax(const SegmentationField& seg, std::span<const int> kept_ids) {
    std::vector<int> slot(seg.k(), -1);
    std::vector<RegionMask> masks;
    for (std::size_t i = 0; i < kept_ids.size(); ++i) {
        slot.at(kept_ids[i]) = static_cast<int>(i);
        masks.emplace_back(seg.height(), seg.width(), kept_ids[i]);
    }
    for (std::size_t p = 0; p < seg.pixel_count(); ++p) {
        const auto px = seg.pixel(p);
        const int winner = static_cast<int>(std::max_element(px.begin(), px.end()) - px.begin());
        if (slot[winner] >= 0) {
            masks[slot[winner]].bits[p] = 1;
        }
    }
    return masks;
}

} // namespace comad
