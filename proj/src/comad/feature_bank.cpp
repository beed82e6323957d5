#include "comad/feature_bank.hpp"

#include "comad/error.hpp"
#include "comad/feature_file.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace comad {

FeatureMap mock_extract(const Image& img, int stride) {
    if (stride < 1 || img.height() < stride || img.width() < stride) {
        throw InvalidArgument("mock_extract: image smaller than patch stride");
    }
    const int h = img.height();
    const int w = img.width();
    const LabImage lab = rgb_to_lab(img);

    // Central-difference gradient magnitude of L, edge replicated.
    std::vector<double> grad(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = 0.5 * (lab.at(y, std::min(x + 1, w - 1)).l - lab.at(y, std::max(x - 1, 0)).l);
            const double gy = 0.5 * (lab.at(std::min(y + 1, h - 1), x).l - lab.at(std::max(y - 1, 0), x).l);
            grad[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
        }
    }

    const int rows = h / stride;
    const int cols = w / stride;
    constexpr int kDim = 7;
    std::vector<float> values(static_cast<std::size_t>(rows) * cols * kDim);
    const double n = static_cast<double>(stride) * stride;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            double sum[3] = {0, 0, 0};
            double g = 0;
            for (int y = i * stride; y < (i + 1) * stride; ++y) {
                for (int x = j * stride; x < (j + 1) * stride; ++x) {
                    const Lab& p = lab.at(y, x);
                    sum[0] += p.l;
                    sum[1] += p.a;
                    sum[2] += p.b;
                    g += grad[static_cast<std::size_t>(y) * w + x];
                }
            }
            const double mean[3] = {sum[0] / n, sum[1] / n, sum[2] / n};
            double var[3] = {0, 0, 0};
            for (int y = i * stride; y < (i + 1) * stride; ++y) {
                for (int x = j * stride; x < (j + 1) * stride; ++x) {
                    const Lab& p = lab.at(y, x);
                    var[0] += (p.l - mean[0]) * (p.l - mean[0]);
                    var[1] += (p.a - mean[1]) * (p.a - mean[1]);
                    var[2] += (p.b - mean[2]) * (p.b - mean[2]);
                }
            }
            float* out = &values[(static_cast<std::size_t>(i) * cols + j) * kDim];
            out[0] = static_cast<float>(mean[0]);
            out[1] = static_cast<float>(mean[1]);
            out[2] = static_cast<float>(mean[2]);
            out[3] = static_cast<float>(std::sqrt(var[0] / n));
            out[4] = static_cast<float>(std::sqrt(var[1] / n));
            out[5] = static_cast<float>(std::sqrt(var[2] / n));
            out[6] = static_cast<float>(g / n);
        }
    }
    return FeatureMap(rows, cols, kDim, std::move(values));
}

FeatureMap MockExtractor::extract(const Image& img, std::string_view) const {
    return mock_extract(img, stride_);
}

FeatureMap FileExtractor::extract(const Image&, std::string_view key) const {
    std::filesystem::path rel(key);
    auto primary = dir_ / rel;
    primary.replace_extension(".cfm");
    if (std::filesystem::exists(primary)) {
        return read_feature_file(primary);
    }
    auto fallback = dir_ / rel.filename();
    fallback.replace_extension(".cfm");
    if (std::filesystem::exists(fallback)) {
        return read_feature_file(fallback);
    }
    throw DataError("no feature file for '" + std::string(key) + "' under " + dir_.string());
}

std::unique_ptr<FeatureExtractor> make_extractor(std::string_view kind, const std::filesystem::path& dir, int stride) {
    if (kind == "mock") {
        return std::make_unique<MockExtractor>(stride);
    }
    if (kind == "file") {
        if (dir.empty()) {
            throw InvalidArgument("features.dir is required when features.extractor = file");
        }
        return std::make_unique<FileExtractor>(dir, stride);
    }
    throw InvalidArgument("unknown feature extractor '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------
// Coreset sampling
// ---------------------------------------------------------------------------

namespace {

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

} // namespace

SampledFeatures coreset_sample(const FeatureMap& fmap, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw InvalidArgument("coreset_sample: ratio must be in (0, 1]");
    }
    const std::size_t total = fmap.patch_count();
    const auto n = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total)));
    if (n < 1) {
        throw InvalidArgument("coreset_sample: ratio selects no vectors (floor(r*I*J) = 0)");
    }
    const int dim = fmap.dim();
    std::vector<double> data(fmap.values().begin(), fmap.values().end());

    std::vector<double> mean(dim, 0.0);
    for (std::size_t p = 0; p < total; ++p) {
        for (int d = 0; d < dim; ++d) {
            mean[d] += data[p * dim + d];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(total);
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> ties;
    auto pick = [&](const std::vector<double>& score, const std::vector<char>& taken, bool maximize) {
        double best = maximize ? -1.0 : std::numeric_limits<double>::infinity();
        ties.clear();
        for (std::size_t p = 0; p < total; ++p) {
            if (taken[p]) {
                continue;
            }
            const double s = score[p];
            if (maximize ? s > best : s < best) {
                best = s;
                ties.assign(1, p);
            } else if (s == best) {
                ties.push_back(p);
            }
        }
        if (ties.size() == 1) {
            return ties.front();
        }
        std::uniform_int_distribution<std::size_t> dist(0, ties.size() - 1);
        return ties[dist(rng)];
    };

    std::vector<char> taken(total, 0);
    std::vector<double> to_mean(total);
    for (std::size_t p = 0; p < total; ++p) {
        to_mean[p] = sq_dist(&data[p * dim], mean.data(), dim);
    }

    SampledFeatures out;
    out.dim = dim;
    out.source_indices.reserve(n);
    std::size_t current = pick(to_mean, taken, false);

    std::vector<double> min_d(total, std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < n; ++t) {
        taken[current] = 1;
        out.source_indices.push_back(current);
        if (t + 1 == n) {
            break;
        }
        const double* c = &data[current * dim];
        for (std::size_t p = 0; p < total; ++p) {
            if (!taken[p]) {
                min_d[p] = std::min(min_d[p], sq_dist(&data[p * dim], c, dim));
            }
        }
        current = pick(min_d, taken, true);
    }

    out.vectors.reserve(n * dim);
    for (std::size_t idx : out.source_indices) {
        out.vectors.insert(out.vectors.end(), data.begin() + static_cast<std::ptrdiff_t>(idx * dim),
                           data.begin() + static_cast<std::ptrdiff_t>((idx + 1) * dim));
    }
    return out;
}

MemoryBank build_memory_bank(std::span<const SampledFeatures> samples) {
    if (samples.empty()) {
        throw InvalidArgument("build_memory_bank: no samples");
    }
    MemoryBank bank;
    bank.dim = samples.front().dim;
    for (const auto& s : samples) {
        if (s.dim != bank.dim) {
            throw InvalidArgument("build_memory_bank: mixed feature dimensions (" + std::to_string(s.dim) + " vs " +
                                  std::to_string(bank.dim) + ")");
        }
        bank.offsets.push_back(bank.rows());
        bank.vectors.insert(bank.vectors.end(), s.vectors.begin(), s.vectors.end());
    }
    return bank;
}

} // namespace comad
