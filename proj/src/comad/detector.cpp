#include "comad/detector.hpp"

#include "comad/dataset.hpp"
#include "comad/error.hpp"
#include "comad/log.hpp"
#include "comad/parallel.hpp"
#include "comad/png_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace comad {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Model helpers
// ---------------------------------------------------------------------------

int ComponentModel::slot_of(int component) const {
    const auto& kept = reserved.kept;
    auto it = std::find(kept.begin(), kept.end(), component);
    return it == kept.end() ? -1 : static_cast<int>(it - kept.begin());
}

bool ComponentModel::counting_enabled(std::size_t slot) const {
    if (!config.counting.enabled || slot >= reserved.kept.size()) {
        return false;
    }
    const auto& off = config.counting.disabled_components;
    return std::find(off.begin(), off.end(), reserved.kept[slot]) == off.end();
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

std::shared_ptr<const SegmentationField> SegmentationCache::find(std::uint64_t key) const {
    std::lock_guard lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        return nullptr;
    }
    ++hits_;
    return it->second;
}

void SegmentationCache::insert(std::uint64_t key, std::shared_ptr<const SegmentationField> field) {
    std::lock_guard lock(mutex_);
    if (map_.count(key)) {
        return;
    }
    map_.emplace(key, std::move(field));
    order_.push_back(key);
    if (max_entries_ > 0 && order_.size() > max_entries_) {
        map_.erase(order_.front());
        order_.erase(order_.begin());
    }
}

std::size_t SegmentationCache::size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
}

std::size_t SegmentationCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

void SegmentationCache::clear() {
    std::lock_guard lock(mutex_);
    map_.clear();
    order_.clear();
    hits_ = 0;
}

namespace {

class Fnv {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::uint64_t segmentation_key(const ComponentModel& model, const Image& img, const std::string& key) {
    const Config& c = model.config;
    const auto opts = segment_options(c);
    Fnv h;
    h.u64(static_cast<std::uint64_t>(img.height()));
    h.u64(static_cast<std::uint64_t>(img.width()));
    h.bytes(img.data().data(), img.data().size());
    h.str(c.features.extractor);
    if (c.features.extractor == "file") {
        h.str(key);
        h.str(c.features.dir);
    }
    h.u64(static_cast<std::uint64_t>(c.features.stride));
    h.u64(static_cast<std::uint64_t>(model.prototypes.k));
    for (double v : model.prototypes.centers) {
        h.f64(v);
    }
    h.f64(opts.temperature);
    h.u64(opts.crf_on);
    if (opts.crf_on) {
        h.f64(opts.crf.a);
        h.f64(opts.crf.b);
        h.f64(opts.crf.theta_alpha);
        h.f64(opts.crf.theta_beta);
        h.f64(opts.crf.theta_gamma);
        h.u64(static_cast<std::uint64_t>(opts.crf.iterations));
        h.u64(static_cast<std::uint64_t>(opts.crf.mode));
        h.f64(opts.crf.sample_ratio);
        h.u64(static_cast<std::uint64_t>(opts.crf.min_samples));
        h.u64(opts.crf.seed);
    }
    return h.value();
}

// Masks, features and connected regions for every kept slot.
void fill_regions(const ComponentModel& model, ImageAnalysis& a) {
    const Config& c = model.config;
    const auto& kept = model.reserved.kept;
    const SegmentationField& seg = *a.seg;
    if (c.region.method == RegionMethod::Argmax) {
        a.masks = extract_regions_argmax(seg, kept);
    } else {
        a.masks.clear();
        for (std::size_t s = 0; s < kept.size(); ++s) {
            a.masks.push_back(extract_region(seg.channel(kept[s]), model.scales.at(s), c.region.method, kept[s]));
        }
    }
    const LabImage lab = rgb_to_lab(a.image);
    a.features.clear();
    a.regions.clear();
    for (const auto& m : a.masks) {
        a.features.push_back(component_features(m, lab, c.metrology.color_eps));
        a.regions.push_back(connected_regions(m, c.counting.min_area_frac));
    }
}

void fill_histograms(const ComponentModel& model, ImageAnalysis& a) {
    a.histograms.clear();
    for (std::size_t s = 0; s < a.regions.size(); ++s) {
        a.histograms.push_back(count_histogram(a.regions[s], model.groups.at(s)));
    }
}

} // namespace

Image to_pipeline_size(const Image& img, int size) {
    if (img.empty()) {
        throw InvalidArgument("empty image");
    }
    return resize_image(img, size, size);
}


std::unique_ptr<FeatureExtractor> model_extractor(const Config& cfg) {
    return make_extractor(cfg.features.extractor, cfg.features.dir, cfg.features.stride);
}

SegmentOptions segment_options(const Config& cfg) {
    SegmentOptions o;
    o.temperature = cfg.segmentation.temperature;
    o.crf_on = cfg.segmentation.crf_enabled;
    o.crf = cfg.segmentation.crf;
    o.crf.seed = cfg.seed;
    return o;
}

std::shared_ptr<const SegmentationField> segment_with_model(const ComponentModel& model, const Image& img, const std::string& key,
                                                            SegmentationCache* cache) {
    std::uint64_t hkey = 0;
    if (cache) {
        hkey = segmentation_key(model, img, key);
        if (auto hit = cache->find(hkey)) {
            return hit;
        }
    }
    const auto extractor = model_extractor(model.config);
    auto seg = std::make_shared<const SegmentationField>(
        segment_image(img, key, *extractor, model.prototypes, segment_options(model.config)));
    if (cache) {
        cache->insert(hkey, seg);
    }
    return seg;
}

ImageAnalysis analyze(const ComponentModel& model, const Image& img, const std::string& key, SegmentationCache* cache) {
    ImageAnalysis a;
    a.key = key;
    a.image = to_pipeline_size(img, model.config.image_size);
    a.seg = segment_with_model(model, a.image, key, cache);
    fill_regions(model, a);
    fill_histograms(model, a);
    return a;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ComponentModel train(std::span<const TrainingImage> images, const Config& cfg, SegmentationCache* cache) {
    cfg.validate();
    if (images.empty()) {
        throw TrainingError(TrainingReason::EmptyDataset, "no training images");
    }
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return images[a].key < images[b].key; });

    const std::size_t n = images.size();
    ComponentModel model;
    model.config = cfg;
    std::vector<ImageAnalysis> items(n);
    for (std::size_t i = 0; i < n; ++i) {
        items[i].key = images[order[i]].key;
        items[i].image = to_pipeline_size(images[order[i]].image, cfg.image_size);
        model.train_keys.push_back(items[i].key);
    }
    log_info("training on " + std::to_string(n) + " images");

    // Memory bank and prototypes.
    const auto extractor = model_extractor(cfg);
    std::vector<SampledFeatures> samples(n);
    parallel_for(n, [&](std::size_t i) {
        const FeatureMap fmap = extractor->extract(items[i].image, items[i].key);
        samples[i] = coreset_sample(fmap, cfg.features.coreset_ratio, cfg.seed + i);
    });
    const MemoryBank bank = build_memory_bank(samples);
    try {
        model.prototypes = kmeans(bank, cfg.segmentation.k, cfg.seed, {cfg.segmentation.max_iter, cfg.segmentation.tol}).prototypes;
    } catch (const InvalidArgument& e) {
        throw TrainingError(TrainingReason::Other, std::string("clustering failed: ") + e.what());
    }

    parallel_for(n, [&](std::size_t i) { items[i].seg = segment_with_model(model, items[i].image, items[i].key, cache); });

    // Reserved components from the reference image.
    std::size_t ref = 0;
    if (cfg.filter.reference_image != "first") {
        auto it = std::find(model.train_keys.begin(), model.train_keys.end(), cfg.filter.reference_image);
        if (it == model.train_keys.end()) {
            throw InvalidArgument("filter.reference_image '" + cfg.filter.reference_image + "' is not a training image");
        }
        ref = static_cast<std::size_t>(it - model.train_keys.begin());
    }
    model.reference_key = model.train_keys[ref];
    model.reserved = select_core_components(*items[ref].seg, cfg.filter.options);
    const auto& kept = model.reserved.kept;

    // c* per kept component.
    model.scales.assign(kept.size(), 1.0);
    model.scale_scores.assign(kept.size(), {});
    if (cfg.region.method == RegionMethod::AdaptiveOtsu) {
        parallel_for(kept.size(), [&](std::size_t s) {
            std::vector<ScalarField> fields;
            fields.reserve(n);
            for (const auto& a : items) {
                fields.push_back(a.seg->channel(kept[s]));
            }
            const auto cal = calibrate_scale(fields, cfg.region.candidates, cfg.region.variance);
            model.scales[s] = cal.scale;
            model.scale_scores[s] = cal.scores;
        });
    }

    parallel_for(n, [&](std::size_t i) { fill_regions(model, items[i]); });

    // Metrological features.
    std::vector<std::vector<ComponentFeatures>> feats(n);
    for (std::size_t i = 0; i < n; ++i) {
        feats[i] = items[i].features;
    }
    model.normalizers = fit_normalizers(feats, cfg.metrology.features);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = build_global_vector(normalize(feats[i], model.normalizers), cfg.metrology.features);
        model.global_bank.push(g);
    }

    // Counting groups and histogram banks.
    model.groups.assign(kept.size(), {});
    model.hist_banks.assign(kept.size(), {});
    for (std::size_t s = 0; s < kept.size(); ++s) {
        std::vector<double> pooled;
        for (const auto& a : items) {
            for (const auto& r : a.regions[s]) {
                pooled.push_back(static_cast<double>(r.area));
            }
        }
        model.groups[s] = fit_groups(pooled, cfg.counting.eps_frac, cfg.counting.min_samples);
    }
    for (auto& a : items) {
        fill_histograms(model, a);
        for (std::size_t s = 0; s < kept.size(); ++s) {
            model.hist_banks[s].push(a.histograms[s].regularized);
        }
    }

    // Training self-scores.
    auto& st = model.stats;
    st.d_g.resize(n);
    st.d_h.resize(n);
    st.d.resize(n);
    const PolicyConfig neutral;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = score_analysis(model, items[i], neutral, cfg.metrology.leave_one_out ? std::optional<std::size_t>(i) : std::nullopt);
        st.d_g[i] = r.d_g;
        st.d_h[i] = r.d_h;
        st.d[i] = r.d;
    }
    st.mean_d = std::accumulate(st.d.begin(), st.d.end(), 0.0) / static_cast<double>(n);
    st.threshold = *std::max_element(st.d.begin(), st.d.end());
    st.area_spread.resize(kept.size());
    for (std::size_t s = 0; s < kept.size(); ++s) {
        std::vector<double> areas(n);
        for (std::size_t i = 0; i < n; ++i) {
            areas[i] = feats[i][s].area;
        }
        st.area_spread[s] = area_spread(areas, cfg.region.variance);
    }
    return model;
}

ComponentModel train_from_directory(const fs::path& root, const Config& cfg, SegmentationCache* cache) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IoError("training directory '" + root.string() + "' does not exist");
    }
    fs::path dir = root / "train" / "good";
    fs::path key_root = root;
    if (!fs::is_directory(dir, ec)) {
        dir = root;
    }
    const auto files = list_pngs(dir);
    if (files.empty()) {
        throw TrainingError(TrainingReason::EmptyDataset, "no PNG images in '" + dir.string() + "'");
    }
    std::vector<TrainingImage> images(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        images[i].key = relative_key(key_root, files[i]);
        images[i].image = read_png(files[i]);
    });
    return train(images, cfg, cache);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

AnomalyReport score_analysis(const ComponentModel& model, const ImageAnalysis& a, const PolicyConfig& policy,
                             std::optional<std::size_t> exclude) {
    const Config& c = model.config;
    const auto& kept = model.reserved.kept;
    if (a.features.size() != kept.size() || a.histograms.size() != kept.size()) {
        throw InvalidArgument("score: analysis does not match the model's components");
    }
    if (exclude && model.global_bank.size() <= 1) {
        exclude.reset();
    }
    const FeatureSet set = c.metrology.features;
    const int stride = features_per_component(set);
    const auto normed = normalize(a.features, model.normalizers);
    const auto g = build_global_vector(normed, set);

    std::vector<double> weights(kept.size());
    std::vector<double> dim_weights(g.size());
    for (std::size_t s = 0; s < kept.size(); ++s) {
        weights[s] = policy.weight(kept[s]);
        for (int j = 0; j < stride; ++j) {
            dim_weights[s * stride + j] = weights[s];
        }
    }

    AnomalyReport r;
    r.image_id = a.key;
    r.alpha = c.alpha;
    const KnnResult raw = knn_score(g, model.global_bank, c.metrology.k, {}, exclude);
    const KnnResult weighted = knn_score(g, model.global_bank, c.metrology.k, dim_weights, exclude);
    r.d_g_raw = raw.score;
    r.d_g = weighted.score;
    r.attributions = attribute(g, model.global_bank, weighted.neighbors, stride, kept, weights);

    std::vector<char> enabled(kept.size());
    for (std::size_t s = 0; s < kept.size(); ++s) {
        enabled[s] = model.counting_enabled(s) ? 1 : 0;
    }
    std::vector<double> per_component;
    r.d_h = counting_score(a.histograms, model.hist_banks, c.counting.k, enabled, exclude, &per_component);
    r.d = r.d_g + r.alpha * r.d_h;

    r.components.resize(kept.size());
    for (std::size_t s = 0; s < kept.size(); ++s) {
        auto& cr = r.components[s];
        cr.component = kept[s];
        cr.slot = static_cast<int>(s);
        cr.area = a.features[s].area;
        cr.color = a.features[s].color;
        cr.area_norm = normed[s].area;
        cr.color_norm = normed[s].color;
        cr.empty = a.features[s].empty;
        cr.regions = a.regions[s].size();
        cr.histogram = a.histograms[s].counts;
        cr.counting = per_component[s];
        cr.weight = weights[s];
    }
    for (const auto& at : r.attributions) {
        r.components[at.slot].contribution = at.contribution;
    }
    apply_decision(r, model, policy);
    return r;
}

void apply_decision(AnomalyReport& r, const ComponentModel& model, const PolicyConfig& policy) {
    r.threshold = policy.global_threshold.value_or(model.stats.threshold);
    r.flagged.clear();
    for (auto& cr : r.components) {
        cr.weight = policy.weight(cr.component);
        cr.threshold = policy.threshold(cr.component);
        cr.over_threshold = cr.contribution > cr.threshold;
        if (cr.over_threshold) {
            r.flagged.push_back(cr.component);
        }
    }
    r.anomalous = r.d > r.threshold || !r.flagged.empty();
}

AnomalyReport score(const ComponentModel& model, const Image& img, const std::string& key, const PolicyConfig& policy,
                    SegmentationCache* cache) {
    return score_analysis(model, analyze(model, img, key, cache), policy);
}

std::string_view to_string(EnsembleMode m) { return m == EnsembleMode::Add ? "add" : "normalized_add"; }

EnsembleMode parse_ensemble_mode(std::string_view s) {
    if (s == "add") return EnsembleMode::Add;
    if (s == "normalized_add") return EnsembleMode::NormalizedAdd;
    throw InvalidArgument("unknown ensemble mode '" + std::string(s) + "' (expected add or normalized_add)");
}

double ensemble(double d, double external, EnsembleMode mode, double d_mean, double external_mean) {
    if (!std::isfinite(external)) {
        throw InvalidArgument("ensemble: external score must be finite");
    }
    if (mode == EnsembleMode::Add) {
        return d + external;
    }
    if (!(d_mean != 0.0) || !(external_mean != 0.0) || !std::isfinite(d_mean) || !std::isfinite(external_mean)) {
        throw InvalidArgument("ensemble: normalized_add needs finite non-zero training means");
    }
    return d / d_mean + external / external_mean;
}

ClassifiedAnomaly classify_anomaly(const ScalarField& anomaly_map, const SegmentationField& seg, const ComponentModel& model,
                                   const PolicyConfig& policy) {
    if (anomaly_map.height() != seg.height() || anomaly_map.width() != seg.width()) {
        throw InvalidArgument("classify_anomaly: anomaly map is " + std::to_string(anomaly_map.height()) + "x" +
                              std::to_string(anomaly_map.width()) + ", segmentation is " + std::to_string(seg.height()) + "x" +
                              std::to_string(seg.width()));
    }
    const auto vals = anomaly_map.values();
    const std::size_t p = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    const auto px = seg.pixel(p);
    const int winner = static_cast<int>(std::max_element(px.begin(), px.end()) - px.begin());
    ClassifiedAnomaly out;
    out.y = static_cast<int>(p / seg.width());
    out.x = static_cast<int>(p % seg.width());
    out.peak = vals[p];
    out.component = model.slot_of(winner) >= 0 ? winner : -1;
    out.score = (out.component < 0 && policy.ignore_background) ? 0.0 : out.peak;
    return out;
}

} // namespace comad
