#include "comad/ablation.hpp"

#include "comad/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace comad {

using nlohmann::json;

std::vector<AblationVariant> standard_ablations() {
    return {
        {"baseline", {}},
        {"no_crf", {{"segmentation.crf.enabled", "false"}}},
        {"region=argmax", {{"region.method", "\"argmax\""}}},
        {"region=otsu", {{"region.method", "\"otsu\""}}},
        {"region=adaptive_otsu", {{"region.method", "\"adaptive_otsu\""}}},
        {"features=A", {{"metrology.features", "\"A\""}}},
        {"features=A+Co", {{"metrology.features", "\"A+Co\""}}},
    };
}

std::vector<AblationRow> run_ablation(std::span<const TrainingImage> train, std::span<const EvalItem> test, const Config& base,
                                      std::span<const AblationVariant> variants, SegmentationCache* cache) {
    std::vector<AblationRow> rows;
    rows.reserve(variants.size());
    for (const auto& v : variants) {
        Config cfg = base;
        for (const auto& [key, value] : v.overrides) {
            apply_override(cfg, key, value);
        }
        cfg.validate();
        const auto model = comad::train(train, cfg, cache);
        AblationRow row;
        row.name = v.name;
        row.config = cfg;
        row.result = run_benchmark(model, PolicyConfig{}, test, cache);
        row.area_spread = model.stats.area_spread;
        row.kept = model.kept_count();
        if (!row.area_spread.empty()) {
            row.mean_area_spread = std::accumulate(row.area_spread.begin(), row.area_spread.end(), 0.0) /
                                   static_cast<double>(row.area_spread.size());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_table(std::span<const AblationRow> rows) {
    std::set<std::string> kinds;
    for (const auto& r : rows) {
        for (const auto& k : r.result.kinds) {
            kinds.insert(k.kind);
        }
    }
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-22s %4s", "variant", "K'");
    out << buf;
    for (const auto& k : kinds) {
        std::snprintf(buf, sizeof buf, " %12s", k.c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %9s %12s\n", "overall", "area_spread");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-22s %4zu", r.name.c_str(), r.kept);
        out << buf;
        for (const auto& k : kinds) {
            const auto it = std::find_if(r.result.kinds.begin(), r.result.kinds.end(), [&](const KindResult& x) { return x.kind == k; });
            if (it == r.result.kinds.end()) {
                std::snprintf(buf, sizeof buf, " %12s", "-");
            } else {
                std::snprintf(buf, sizeof buf, " %12.4f", it->auroc);
            }
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %9.4f %12.6f\n", r.result.overall, r.mean_area_spread);
        out << buf;
    }
    return out.str();
}

std::string ablation_to_json(std::span<const AblationRow> rows, int indent) {
    json arr = json::array();
    for (const auto& r : rows) {
        json kinds = json::object();
        for (const auto& k : r.result.kinds) {
            kinds[k.kind] = k.auroc;
        }
        arr.push_back({{"variant", r.name},
                       {"kept", r.kept},
                       {"overall", r.result.overall},
                       {"kinds", kinds},
                       {"categories", r.result.categories},
                       {"area_spread", r.area_spread},
                       {"mean_area_spread", r.mean_area_spread},
                       {"config", json::parse(config_to_json(r.config))}});
    }
    return json{{"ablation", arr}}.dump(indent);
}

} // namespace comad
