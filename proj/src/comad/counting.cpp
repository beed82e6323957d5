#include "comad/counting.hpp"

#include "comad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace comad {

std::vector<ConnectedRegion> connected_regions(const RegionMask& mask, double min_area_frac) {
    const int h = mask.height;
    const int w = mask.width;
    const double min_area = min_area_frac * static_cast<double>(h) * w;
    std::vector<char> seen(mask.bits.size(), 0);
    std::vector<std::size_t> stack;
    std::vector<ConnectedRegion> out;
    for (std::size_t start = 0; start < mask.bits.size(); ++start) {
        if (!mask.bits[start] || seen[start]) {
            continue;
        }
        ConnectedRegion reg;
        reg.component = mask.component;
        reg.y0 = reg.y1 = static_cast<int>(start / w);
        reg.x0 = reg.x1 = static_cast<int>(start % w);
        seen[start] = 1;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++reg.area;
            const int y = static_cast<int>(p / w);
            const int x = static_cast<int>(p % w);
            reg.y0 = std::min(reg.y0, y);
            reg.y1 = std::max(reg.y1, y);
            reg.x0 = std::min(reg.x0, x);
            reg.x1 = std::max(reg.x1, x);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int ny = y + dy;
                    const int nx = x + dx;
                    if ((dy == 0 && dx == 0) || ny < 0 || ny >= h || nx < 0 || nx >= w) {
                        continue;
                    }
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.bits[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        if (static_cast<double>(reg.area) >= min_area) {
            out.push_back(reg);
        }
    }
    return out;
}

DbscanResult dbscan_1d(std::span<const double> values, double eps, int min_samples) {
    DbscanResult res;
    const std::size_t n = values.size();
    res.labels.assign(n, -1);
    if (n == 0) {
        return res;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = values[order[i]];
    }

    // Neighbourhood sizes with a sliding window over the sorted values.
    std::vector<char> core(n, 0);
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (v[i] - v[lo] > eps) {
            ++lo;
        }
        if (hi < i) {
            hi = i;
        }
        while (hi + 1 < n && v[hi + 1] - v[i] <= eps) {
            ++hi;
        }
        core[i] = (hi - lo + 1) >= static_cast<std::size_t>(min_samples);
    }

    // Consecutive cores within eps share a cluster.
    std::vector<std::size_t> cores;
    std::vector<int> sorted_label(n, -1);
    int cluster = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) {
            continue;
        }
        if (cores.empty() || v[i] - v[cores.back()] > eps) {
            ++cluster;
        }
        sorted_label[i] = cluster;
        cores.push_back(i);
    }
    res.clusters = cluster + 1;

    // Border points: nearest core, ties to the smaller value.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i] || cores.empty()) {
            continue;
        }
        auto it = std::lower_bound(cores.begin(), cores.end(), i, [&](std::size_t c, std::size_t x) { return v[c] < v[x]; });
        double best = eps;
        int label = -1;
        bool found = false;
        if (it != cores.begin()) {
            const std::size_t c = *(it - 1);
            const double d = std::abs(v[i] - v[c]);
            if (d <= eps) {
                best = d;
                label = sorted_label[c];
                found = true;
            }
        }
        if (it != cores.end()) {
            const std::size_t c = *it;
            const double d = std::abs(v[c] - v[i]);
            if (d <= eps && (!found || d < best)) {
                label = sorted_label[c];
            }
        }
        sorted_label[i] = label;
    }

    for (std::size_t i = 0; i < n; ++i) {
        res.labels[order[i]] = sorted_label[i];
    }
    return res;
}

AreaGroups fit_groups(std::span<const double> pooled_areas, double eps_frac, int min_samples) {
    AreaGroups g;
    if (pooled_areas.empty()) {
        return g;
    }
    const double mean = std::accumulate(pooled_areas.begin(), pooled_areas.end(), 0.0) / static_cast<double>(pooled_areas.size());
    const auto db = dbscan_1d(pooled_areas, eps_frac * mean, min_samples);
    std::vector<double> sum(db.clusters, 0.0);
    std::vector<std::size_t> cnt(db.clusters, 0);
    for (std::size_t i = 0; i < pooled_areas.size(); ++i) {
        if (db.labels[i] >= 0) {
            sum[db.labels[i]] += pooled_areas[i];
            ++cnt[db.labels[i]];
        }
    }
    for (int c = 0; c < db.clusters; ++c) {
        g.centroids.push_back(sum[c] / static_cast<double>(cnt[c]));
    }
    std::sort(g.centroids.begin(), g.centroids.end());
    return g;
}

CountHistogram count_histogram(std::span<const ConnectedRegion> regions, const AreaGroups& groups) {
    CountHistogram h;
    const int n = groups.count();
    if (n == 0) {
        return h;
    }
    h.counts.assign(n, 0.0);
    for (const auto& r : regions) {
        const double a = static_cast<double>(r.area);
        int best = 0;
        double best_d = std::abs(a - groups.centroids[0]);
        for (int g = 1; g < n; ++g) {
            const double d = std::abs(a - groups.centroids[g]);
            if (d < best_d) {
                best_d = d;
                best = g;
            }
        }
        h.counts[best] += 1.0;
    }
    h.regularized.resize(n);
    for (int g = 0; g < n; ++g) {
        h.regularized[g] = h.counts[g] / n;
    }
    return h;
}

KnnResult histogram_distance(const CountHistogram& hist, const VectorBank& bank, int k, std::optional<std::size_t> exclude) {
    return knn_score(hist.regularized, bank, k, {}, exclude);
}

double counting_score(std::span<const CountHistogram> hists, std::span<const VectorBank> banks, int k,
                      std::span<const char> enabled, std::optional<std::size_t> exclude, std::vector<double>* per_component) {
    if (hists.size() != banks.size()) {
        throw InvalidArgument("counting_score: histogram and bank counts differ");
    }
    if (per_component) {
        per_component->assign(hists.size(), 0.0);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < hists.size(); ++c) {
        if (hists[c].regularized.empty() || banks[c].dim == 0 || (!enabled.empty() && !enabled[c])) {
            continue;
        }
        const double d = histogram_distance(hists[c], banks[c], k, exclude).score;
        if (per_component) {
            (*per_component)[c] = d;
        }
        total += d;
    }
    return total;
}

} // namespace comad
