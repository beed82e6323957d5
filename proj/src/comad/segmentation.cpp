#include "comad/segmentation.hpp"

#include "comad/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace comad {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

std::size_t count_distinct_rows(std::span<const double> data, int dim, std::size_t limit) {
    std::set<std::vector<double>> seen;
    const std::size_t rows = data.size() / dim;
    for (std::size_t r = 0; r < rows && seen.size() < limit; ++r) {
        seen.emplace(data.begin() + static_cast<std::ptrdiff_t>(r * dim), data.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
    }
    return seen.size();
}

} // namespace

KMeansResult kmeans(std::span<const double> data, int dim, int k, std::uint64_t seed, KMeansOptions opts) {
    if (dim < 1 || data.size() % dim != 0) {
        throw InvalidArgument("kmeans: data size is not a multiple of dim");
    }
    if (k < 1) {
        throw InvalidArgument("kmeans: k must be >= 1");
    }
    const std::size_t rows = data.size() / dim;
    if (rows < static_cast<std::size_t>(k)) {
        throw InvalidArgument("kmeans: " + std::to_string(rows) + " rows < k = " + std::to_string(k));
    }
    if (count_distinct_rows(data, dim, static_cast<std::size_t>(k)) < static_cast<std::size_t>(k)) {
        throw InvalidArgument("kmeans: fewer than k distinct rows");
    }

    std::mt19937_64 rng(seed);
    std::vector<double> centers;
    centers.reserve(static_cast<std::size_t>(k) * dim);

    // k-means++ seeding.
    {
        std::uniform_int_distribution<std::size_t> first(0, rows - 1);
        const std::size_t c0 = first(rng);
        centers.insert(centers.end(), data.begin() + static_cast<std::ptrdiff_t>(c0 * dim),
                       data.begin() + static_cast<std::ptrdiff_t>((c0 + 1) * dim));
        std::vector<double> d2(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            d2[r] = sq_dist(&data[r * dim], centers.data(), dim);
        }
        for (int c = 1; c < k; ++c) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            std::uniform_real_distribution<double> u(0.0, total);
            const double target = u(rng);
            double acc = 0.0;
            std::size_t chosen = rows;
            std::size_t last_positive = 0;
            for (std::size_t r = 0; r < rows; ++r) {
                if (d2[r] > 0.0) {
                    last_positive = r;
                }
                acc += d2[r];
                if (acc > target && d2[r] > 0.0) {
                    chosen = r;
                    break;
                }
            }
            if (chosen == rows) {
                chosen = last_positive;
            }
            const double* row = &data[chosen * dim];
            centers.insert(centers.end(), row, row + dim);
            for (std::size_t r = 0; r < rows; ++r) {
                d2[r] = std::min(d2[r], sq_dist(&data[r * dim], row, dim));
            }
        }
    }

    KMeansResult res;
    res.labels.assign(rows, -1);
    std::vector<int> prev;
    std::vector<double> point_d2(rows);
    std::vector<double> sums(static_cast<std::size_t>(k) * dim);
    std::vector<std::size_t> counts(k);

    for (int it = 0; it < opts.max_iter; ++it) {
        double obj = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(&data[r * dim], &centers[static_cast<std::size_t>(c) * dim], dim);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            res.labels[r] = best;
            point_d2[r] = best_d;
            obj += best_d;
        }
        res.objective_history.push_back(obj);
        res.iterations = it + 1;
        if (res.labels == prev) {
            break;
        }
        prev = res.labels;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t r = 0; r < rows; ++r) {
            const int c = res.labels[r];
            ++counts[c];
            for (int d = 0; d < dim; ++d) {
                sums[static_cast<std::size_t>(c) * dim + d] += data[r * dim + d];
            }
        }
        std::vector<char> reseeded(rows, 0);
        for (int c = 0; c < k; ++c) {
            double* center = &centers[static_cast<std::size_t>(c) * dim];
            if (counts[c] > 0) {
                for (int d = 0; d < dim; ++d) {
                    center[d] = sums[static_cast<std::size_t>(c) * dim + d] / static_cast<double>(counts[c]);
                }
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t r = 0; r < rows; ++r) {
                if (!reseeded[r] && point_d2[r] > far_d) {
                    far_d = point_d2[r];
                    far = r;
                }
            }
            reseeded[far] = 1;
            point_d2[far] = 0.0;
            std::copy_n(&data[far * dim], dim, center);
        }

        const std::size_t n = res.objective_history.size();
        if (n >= 2) {
            const double before = res.objective_history[n - 2];
            if (before - obj <= opts.tol * std::max(before, std::numeric_limits<double>::min())) {
                // Objective has stalled; one more assignment pass settles the labels.
                opts.max_iter = std::min(opts.max_iter, it + 2);
            }
        }
    }

    res.prototypes.k = k;
    res.prototypes.dim = dim;
    res.prototypes.centers = std::move(centers);
    return res;
}

KMeansResult kmeans(const MemoryBank& bank, int k, std::uint64_t seed, KMeansOptions opts) {
    return kmeans(bank.vectors, bank.dim, k, seed, opts);
}

SegmentationField assign_soft(const FeatureMap& fmap, const ComponentPrototypes& protos, double temperature) {
    if (fmap.dim() != protos.dim) {
        throw InvalidArgument("assign_soft: feature dim " + std::to_string(fmap.dim()) + " != prototype dim " +
                              std::to_string(protos.dim));
    }
    if (!(temperature > 0.0)) {
        throw InvalidArgument("assign_soft: temperature must be positive");
    }
    const int k = protos.k;
    const int dim = protos.dim;
    std::vector<double> center_norm(k);
    for (int c = 0; c < k; ++c) {
        const auto ctr = protos.center(c);
        double s = 0.0;
        for (double v : ctr) {
            s += v * v;
        }
        center_norm[c] = std::sqrt(s);
    }

    SegmentationField out(fmap.rows(), fmap.cols(), k);
    std::vector<double> logits(k);
    for (std::size_t p = 0; p < fmap.patch_count(); ++p) {
        const auto f = fmap.vec(p);
        double fn = 0.0;
        for (float v : f) {
            fn += static_cast<double>(v) * v;
        }
        fn = std::sqrt(fn);
        auto dst = out.pixel(p);
        if (fn == 0.0) {
            std::fill(dst.begin(), dst.end(), 1.0 / k);
            continue;
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const auto ctr = protos.center(c);
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) {
                dot += static_cast<double>(f[d]) * ctr[d];
            }
            const double sim = center_norm[c] > 0.0 ? dot / (fn * center_norm[c]) : 0.0;
            logits[c] = sim / temperature;
            mx = std::max(mx, logits[c]);
        }
        double z = 0.0;
        for (int c = 0; c < k; ++c) {
            dst[c] = std::exp(logits[c] - mx);
            z += dst[c];
        }
        for (int c = 0; c < k; ++c) {
            dst[c] /= z;
        }
    }
    return out;
}

SegmentationField segment_image(const Image& img, std::string_view key, const FeatureExtractor& extractor,
                                const ComponentPrototypes& protos, const SegmentOptions& opts) {
    const FeatureMap fmap = extractor.extract(img, key);
    const SegmentationField coarse = assign_soft(fmap, protos, opts.temperature);
    auto up = bilinear_resize(coarse.values(), coarse.height(), coarse.width(), coarse.k(), img.height(), img.width());
    SegmentationField seg(img.height(), img.width(), coarse.k(), std::move(up));
    if (!opts.crf_on) {
        return seg;
    }
    return crf_refine(seg, img, opts.crf);
}

std::vector<int> argmax_labels(const SegmentationField& seg) {
    std::vector<int> labels(seg.pixel_count());
    for (std::size_t p = 0; p < seg.pixel_count(); ++p) {
        const auto px = seg.pixel(p);
        labels[p] = static_cast<int>(std::max_element(px.begin(), px.end()) - px.begin());
    }
    return labels;
}

} // namespace comad
