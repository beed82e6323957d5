#include "comad/json_io.hpp"

#include "comad/error.hpp"

#include "json.hpp"

#include <cmath>

namespace comad {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

} // namespace

std::string report_to_json(const AnomalyReport& r, int indent) {
    json attributions = json::array();
    for (const auto& a : r.attributions) {
        attributions.push_back({{"component", a.component}, {"slot", a.slot}, {"contribution", a.contribution}});
    }
    json comps = json::array();
    for (const auto& c : r.components) {
        comps.push_back({{"component", c.component},
                         {"slot", c.slot},
                         {"area", c.area},
                         {"color", c.color},
                         {"area_norm", c.area_norm},
                         {"color_norm", c.color_norm},
                         {"empty", c.empty},
                         {"regions", c.regions},
                         {"histogram", c.histogram},
                         {"contribution", c.contribution},
                         {"counting", c.counting},
                         {"weight", c.weight},
                         {"threshold", finite_or_null(c.threshold)},
                         {"over_threshold", c.over_threshold}});
    }
    json j{{"image_id", r.image_id},
           {"D_G", r.d_g},
           {"D_G_raw", r.d_g_raw},
           {"D_H", r.d_h},
           {"alpha", r.alpha},
           {"D", r.d},
           {"threshold", finite_or_null(r.threshold)},
           {"decision", r.anomalous ? "anomalous" : "normal"},
           {"flagged", r.flagged},
           {"attributions", attributions},
           {"components", comps}};
    if (r.classified) {
        const auto& c = *r.classified;
        j["classified"] = {{"component", c.component < 0 ? json("background") : json(c.component)},
                           {"peak", c.peak},
                           {"score", c.score},
                           {"y", c.y},
                           {"x", c.x}};
    }
    if (r.external_score) {
        j["external_score"] = *r.external_score;
    }
    if (r.combined_score) {
        j["combined_score"] = *r.combined_score;
    }
    return j.dump(indent);
}

std::string model_summary_json(const ComponentModel& m, int indent) {
    json comps = json::array();
    for (std::size_t s = 0; s < m.reserved.kept.size(); ++s) {
        comps.push_back({{"component", m.reserved.kept[s]},
                         {"slot", s},
                         {"scale", m.scales[s]},
                         {"scale_scores", m.scale_scores[s]},
                         {"mean_area", m.normalizers.mean_area[s]},
                         {"mean_color", m.normalizers.mean_color[s]},
                         {"group_centroids", m.groups[s].centroids},
                         {"counting_enabled", m.counting_enabled(s)},
                         {"area_spread", m.stats.area_spread[s]}});
    }
    json j{{"version", m.version},
           {"k", m.prototypes.k},
           {"k_kept", m.reserved.kept.size()},
           {"kept", m.reserved.kept},
           {"noise", m.reserved.noise},
           {"background", m.reserved.background},
           {"reference_image", m.reference_key},
           {"components", comps},
           {"training",
            {{"images", m.train_keys.size()},
             {"mean_D", m.stats.mean_d},
             {"threshold", m.stats.threshold},
             {"D", m.stats.d}}},
           {"config", json::parse(config_to_json(m.config))}};
    return j.dump(indent);
}

std::vector<std::uint32_t> rle_encode(const RegionMask& mask) {
    std::vector<std::uint32_t> runs;
    const std::size_t n = mask.bits.size();
    for (std::size_t i = 0; i < n;) {
        if (!mask.bits[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && mask.bits[j]) {
            ++j;
        }
        runs.push_back(static_cast<std::uint32_t>(i));
        runs.push_back(static_cast<std::uint32_t>(j - i));
        i = j;
    }
    return runs;
}

RegionMask rle_decode(std::span<const std::uint32_t> runs, int height, int width, int component) {
    if (runs.size() % 2 != 0) {
        throw InvalidArgument("rle_decode: odd run array");
    }
    RegionMask m(height, width, component);
    for (std::size_t i = 0; i < runs.size(); i += 2) {
        const std::size_t start = runs[i];
        const std::size_t len = runs[i + 1];
        if (start + len > m.bits.size()) {
            throw InvalidArgument("rle_decode: run exceeds the mask");
        }
        std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(start), len, std::uint8_t{1});
    }
    return m;
}

std::string masks_to_json(const ImageAnalysis& a, int indent) {
    json masks = json::array();
    for (std::size_t s = 0; s < a.masks.size(); ++s) {
        masks.push_back({{"component", a.masks[s].component},
                         {"area", a.masks[s].area()},
                         {"regions", a.regions.at(s).size()},
                         {"rle", rle_encode(a.masks[s])}});
    }
    json j{{"image_id", a.key}, {"height", a.image.height()}, {"width", a.image.width()}, {"masks", masks}};
    return j.dump(indent);
}

} // namespace comad
