#include "comad/metrology.hpp"

#include "comad/error.hpp"
#include "comad/log.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace comad {

ComponentFeatures component_features(const RegionMask& mask, const LabImage& lab, double eps) {
    if (mask.height != lab.height() || mask.width != lab.width()) {
        throw InvalidArgument("component_features: mask and image sizes differ");
    }
    ComponentFeatures f;
    double ratio_sum = 0.0;
    std::size_t area = 0;
    const auto px = lab.data();
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i]) {
            continue;
        }
        ++area;
        const double a = px[i].a;
        const double denom = (a < 0.0 ? -1.0 : 1.0) * std::max(std::abs(a), eps);
        ratio_sum += px[i].b / denom;
    }
    f.area = static_cast<double>(area);
    if (area == 0) {
        f.empty = true;
        return f;
    }
    f.color = ratio_sum / static_cast<double>(area);
    return f;
}

std::string_view to_string(FeatureSet f) {
    return f == FeatureSet::Area ? "A" : "A+Co";
}

FeatureSet parse_feature_set(std::string_view s) {
    if (s == "A") return FeatureSet::Area;
    if (s == "A+Co") return FeatureSet::AreaColor;
    throw InvalidArgument("unknown feature set '" + std::string(s) + "' (expected A or A+Co)");
}

Normalizers fit_normalizers(std::span<const std::vector<ComponentFeatures>> train, FeatureSet set) {
    if (train.empty()) {
        throw TrainingError(TrainingReason::EmptyDataset, "fit_normalizers: no training features");
    }
    const std::size_t comps = train.front().size();
    Normalizers n;
    n.n_train = train.size();
    n.mean_area.assign(comps, 0.0);
    n.mean_color.assign(comps, 0.0);
    for (const auto& row : train) {
        if (row.size() != comps) {
            throw InvalidArgument("fit_normalizers: ragged feature matrix");
        }
        for (std::size_t c = 0; c < comps; ++c) {
            n.mean_area[c] += row[c].area;
            n.mean_color[c] += row[c].color;
        }
    }
    for (std::size_t c = 0; c < comps; ++c) {
        n.mean_area[c] /= static_cast<double>(train.size());
        n.mean_color[c] /= static_cast<double>(train.size());
        if (n.mean_area[c] == 0.0) {
            throw TrainingError(TrainingReason::ZeroMeanFeature,
                                "component slot " + std::to_string(c) + " has zero mean area over the training set");
        }
        if (set == FeatureSet::AreaColor && n.mean_color[c] == 0.0) {
            throw TrainingError(TrainingReason::ZeroMeanFeature,
                                "component slot " + std::to_string(c) + " has zero mean colour over the training set");
        }
    }
    return n;
}

std::vector<ComponentFeatures> normalize(std::span<const ComponentFeatures> features, const Normalizers& norms) {
    if (features.size() != norms.mean_area.size()) {
        throw InvalidArgument("normalize: component count mismatch");
    }
    std::vector<ComponentFeatures> out(features.begin(), features.end());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c].area = features[c].area / norms.mean_area[c];
        out[c].color = norms.mean_color[c] != 0.0 ? features[c].color / norms.mean_color[c] : 0.0;
    }
    return out;
}

std::vector<double> build_global_vector(std::span<const ComponentFeatures> normalized, FeatureSet set) {
    if (normalized.empty()) {
        throw InvalidArgument("build_global_vector: no components");
    }
    std::vector<double> g;
    g.reserve(normalized.size() * 2);
    for (const auto& f : normalized) {
        g.push_back(f.area);
        if (set == FeatureSet::AreaColor) {
            g.push_back(f.color);
        }
    }
    return g;
}

void VectorBank::push(std::span<const double> v) {
    if (dim == 0) {
        dim = static_cast<int>(v.size());
    }
    if (v.size() != static_cast<std::size_t>(dim)) {
        throw InvalidArgument("VectorBank: vector length " + std::to_string(v.size()) + " != bank dim " + std::to_string(dim));
    }
    rows.insert(rows.end(), v.begin(), v.end());
}

KnnResult knn_score(std::span<const double> query, const VectorBank& bank, int k, std::span<const double> dim_weights,
                    std::optional<std::size_t> exclude) {
    if (k < 1) {
        throw InvalidArgument("knn_score: k must be >= 1");
    }
    if (query.size() != static_cast<std::size_t>(bank.dim)) {
        throw InvalidArgument("knn_score: query length does not match bank");
    }
    if (!dim_weights.empty() && dim_weights.size() != query.size()) {
        throw InvalidArgument("knn_score: weight length does not match query");
    }
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(bank.size());
    for (std::size_t r = 0; r < bank.size(); ++r) {
        if (exclude && *exclude == r) {
            continue;
        }
        const auto row = bank.row(r);
        double s = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) {
            const double diff = query[i] - row[i];
            s += (dim_weights.empty() ? 1.0 : dim_weights[i]) * diff * diff;
        }
        d.emplace_back(std::sqrt(s), r);
    }
    if (d.empty()) {
        throw InvalidArgument("knn_score: bank is empty");
    }
    std::size_t kk = static_cast<std::size_t>(k);
    if (d.size() < kk) {
        log_warning("knn_score: bank has " + std::to_string(d.size()) + " rows < k = " + std::to_string(k) +
                    "; using k = " + std::to_string(d.size()));
        kk = d.size();
    }
    std::sort(d.begin(), d.end());
    KnnResult res;
    res.k_used = kk;
    double sum = 0.0;
    for (std::size_t i = 0; i < kk; ++i) {
        sum += d[i].first;
        res.neighbors.push_back(d[i].second);
        res.distances.push_back(d[i].first);
    }
    res.score = sum / static_cast<double>(kk);
    return res;
}

std::vector<Attribution> attribute(std::span<const double> query, const VectorBank& bank, std::span<const std::size_t> neighbors,
                                   int stride, std::span<const int> component_ids, std::span<const double> component_weights) {
    if (stride < 1 || query.size() % static_cast<std::size_t>(stride) != 0) {
        throw InvalidArgument("attribute: query length not a multiple of stride");
    }
    const std::size_t comps = query.size() / stride;
    if (component_ids.size() != comps) {
        throw InvalidArgument("attribute: component id count mismatch");
    }
    std::vector<double> mean(query.size(), 0.0);
    for (std::size_t n : neighbors) {
        const auto row = bank.row(n);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += row[i];
        }
    }
    if (!neighbors.empty()) {
        for (auto& m : mean) {
            m /= static_cast<double>(neighbors.size());
        }
    }
    std::vector<Attribution> out(comps);
    for (std::size_t c = 0; c < comps; ++c) {
        double s = 0.0;
        for (int j = 0; j < stride; ++j) {
            const std::size_t i = c * stride + j;
            s += (query[i] - mean[i]) * (query[i] - mean[i]);
        }
        const double w = component_weights.empty() ? 1.0 : component_weights[c];
        out[c] = {static_cast<int>(c), component_ids[c], std::sqrt(w * s)};
    }
    std::stable_sort(out.begin(), out.end(), [](const Attribution& a, const Attribution& b) { return a.contribution > b.contribution; });
    return out;
}

} // namespace comad
