#include "comad/config.hpp"

#include "comad/error.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace comad {

using nlohmann::json;

namespace {

std::string_view to_string(CrfMode m) { return m == CrfMode::Exact ? "exact" : "subsampled"; }

CrfMode parse_crf_mode(std::string_view s) {
    if (s == "exact") return CrfMode::Exact;
    if (s == "subsampled") return CrfMode::Subsampled;
    throw InvalidArgument("unknown crf mode '" + std::string(s) + "'");
}

json to_json_tree(const Config& c) {
    const auto& crf = c.segmentation.crf;
    return json{
        {"seed", c.seed},
        {"pipeline", {{"image_size", c.image_size}}},
        {"detector", {{"alpha", c.alpha}}},
        {"features",
         {{"extractor", c.features.extractor},
          {"dir", c.features.dir},
          {"stride", c.features.stride},
          {"coreset_ratio", c.features.coreset_ratio}}},
        {"segmentation",
         {{"k", c.segmentation.k},
          {"temperature", c.segmentation.temperature},
          {"max_iter", c.segmentation.max_iter},
          {"tol", c.segmentation.tol},
          {"crf",
           {{"enabled", c.segmentation.crf_enabled},
            {"a", crf.a},
            {"b", crf.b},
            {"theta_alpha", crf.theta_alpha},
            {"theta_beta", crf.theta_beta},
            {"theta_gamma", crf.theta_gamma},
            {"iterations", crf.iterations},
            {"mode", to_string(crf.mode)},
            {"sample_ratio", crf.sample_ratio},
            {"min_samples", crf.min_samples}}}}},
        {"filter",
         {{"corner_window", c.filter.options.corner_window},
          {"noise_max_threshold", c.filter.options.noise_max_threshold},
          {"mean_filter_size", c.filter.options.mean_filter_size},
          {"min_corners", c.filter.options.min_corners},
          {"reference_image", c.filter.reference_image}}},
        {"region",
         {{"method", to_string(c.region.method)},
          {"candidates", c.region.candidates},
          {"variance", to_string(c.region.variance)}}},
        {"metrology",
         {{"k", c.metrology.k},
          {"color_eps", c.metrology.color_eps},
          {"features", to_string(c.metrology.features)},
          {"leave_one_out", c.metrology.leave_one_out}}},
        {"counting",
         {{"enabled", c.counting.enabled},
          {"min_area_frac", c.counting.min_area_frac},
          {"eps_frac", c.counting.eps_frac},
          {"min_samples", c.counting.min_samples},
          {"k", c.counting.k},
          {"disabled_components", c.counting.disabled_components}}},
    };
}

Config from_json_tree(const json& j) {
    Config c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.image_size = j.at("pipeline").at("image_size").get<int>();
    c.alpha = j.at("detector").at("alpha").get<double>();
    const auto& f = j.at("features");
    c.features.extractor = f.at("extractor").get<std::string>();
    c.features.dir = f.at("dir").get<std::string>();
    c.features.stride = f.at("stride").get<int>();
    c.features.coreset_ratio = f.at("coreset_ratio").get<double>();
    const auto& s = j.at("segmentation");
    c.segmentation.k = s.at("k").get<int>();
    c.segmentation.temperature = s.at("temperature").get<double>();
    c.segmentation.max_iter = s.at("max_iter").get<int>();
    c.segmentation.tol = s.at("tol").get<double>();
    const auto& crf = s.at("crf");
    c.segmentation.crf_enabled = crf.at("enabled").get<bool>();
    c.segmentation.crf.a = crf.at("a").get<double>();
    c.segmentation.crf.b = crf.at("b").get<double>();
    c.segmentation.crf.theta_alpha = crf.at("theta_alpha").get<double>();
    c.segmentation.crf.theta_beta = crf.at("theta_beta").get<double>();
    c.segmentation.crf.theta_gamma = crf.at("theta_gamma").get<double>();
    c.segmentation.crf.iterations = crf.at("iterations").get<int>();
    c.segmentation.crf.mode = parse_crf_mode(crf.at("mode").get<std::string>());
    c.segmentation.crf.sample_ratio = crf.at("sample_ratio").get<double>();
    c.segmentation.crf.min_samples = crf.at("min_samples").get<int>();
    const auto& fl = j.at("filter");
    c.filter.options.corner_window = fl.at("corner_window").get<int>();
    c.filter.options.noise_max_threshold = fl.at("noise_max_threshold").get<double>();
    c.filter.options.mean_filter_size = fl.at("mean_filter_size").get<int>();
    c.filter.options.min_corners = fl.at("min_corners").get<int>();
    c.filter.reference_image = fl.at("reference_image").get<std::string>();
    const auto& r = j.at("region");
    c.region.method = parse_region_method(r.at("method").get<std::string>());
    c.region.candidates = r.at("candidates").get<std::vector<double>>();
    c.region.variance = parse_variance_mode(r.at("variance").get<std::string>());
    const auto& m = j.at("metrology");
    c.metrology.k = m.at("k").get<int>();
    c.metrology.color_eps = m.at("color_eps").get<double>();
    c.metrology.features = parse_feature_set(m.at("features").get<std::string>());
    c.metrology.leave_one_out = m.at("leave_one_out").get<bool>();
    const auto& cn = j.at("counting");
    c.counting.enabled = cn.at("enabled").get<bool>();
    c.counting.min_area_frac = cn.at("min_area_frac").get<double>();
    c.counting.eps_frac = cn.at("eps_frac").get<double>();
    c.counting.min_samples = cn.at("min_samples").get<int>();
    c.counting.k = cn.at("k").get<int>();
    c.counting.disabled_components = cn.at("disabled_components").get<std::vector<int>>();
    return c;
}

// {"a.b": 1} -> {"a": {"b": 1}}, recursively.
json expand_dotted(const json& in) {
    if (!in.is_object()) {
        return in;
    }
    json out = json::object();
    for (const auto& [key, value] : in.items()) {
        json* node = &out;
        std::string_view rest = key;
        for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
            node = &(*node)[std::string(rest.substr(0, dot))];
            if (!node->is_object() && !node->is_null()) {
                throw InvalidArgument("config key '" + key + "' conflicts with a scalar value");
            }
            rest.remove_prefix(dot + 1);
        }
        json expanded = expand_dotted(value);
        json& slot = (*node)[std::string(rest)];
        if (slot.is_object() && expanded.is_object()) {
            slot.merge_patch(expanded);
        } else {
            slot = std::move(expanded);
        }
    }
    return out;
}

void check_known(const json& user, const json& known, const std::string& prefix) {
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!known.contains(key)) {
            throw InvalidArgument("unknown config key '" + path + "'");
        }
        if (value.is_object()) {
            if (!known.at(key).is_object()) {
                throw InvalidArgument("config key '" + path + "' is not a section");
            }
            check_known(value, known.at(key), path);
        }
    }
}

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string(what) + ": " + e.what());
    }
}

} // namespace

void Config::validate() const {
    if (image_size < 8) throw InvalidArgument("pipeline.image_size must be >= 8");
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw InvalidArgument("detector.alpha must be finite and >= 0");
    if (features.extractor != "mock" && features.extractor != "file") {
        throw InvalidArgument("features.extractor must be mock or file");
    }
    if (features.stride < 1) throw InvalidArgument("features.stride must be >= 1");
    if (!(features.coreset_ratio > 0 && features.coreset_ratio <= 1)) {
        throw InvalidArgument("features.coreset_ratio must be in (0, 1]");
    }
    if (segmentation.k < 2) throw InvalidArgument("segmentation.k must be >= 2");
    if (!(segmentation.temperature > 0)) throw InvalidArgument("segmentation.temperature must be > 0");
    if (segmentation.max_iter < 1) throw InvalidArgument("segmentation.max_iter must be >= 1");
    segmentation.crf.validate();
    if (filter.options.mean_filter_size < 1 || filter.options.mean_filter_size % 2 == 0) {
        throw InvalidArgument("filter.mean_filter_size must be odd and >= 1");
    }
    if (filter.options.corner_window < 1) throw InvalidArgument("filter.corner_window must be >= 1");
    if (filter.options.min_corners < 1 || filter.options.min_corners > 4) {
        throw InvalidArgument("filter.min_corners must be in 1..4");
    }
    if (region.candidates.empty()) throw InvalidArgument("region.candidates must not be empty");
    for (double c : region.candidates) {
        if (!(c > 0) || !std::isfinite(c)) throw InvalidArgument("region.candidates must be positive");
    }
    if (metrology.k < 1) throw InvalidArgument("metrology.k must be >= 1");
    if (!(metrology.color_eps > 0)) throw InvalidArgument("metrology.color_eps must be > 0");
    if (counting.k < 1) throw InvalidArgument("counting.k must be >= 1");
    if (counting.min_samples < 1) throw InvalidArgument("counting.min_samples must be >= 1");
    if (!(counting.eps_frac > 0)) throw InvalidArgument("counting.eps_frac must be > 0");
    if (!(counting.min_area_frac >= 0)) throw InvalidArgument("counting.min_area_frac must be >= 0");
}

std::string config_to_json(const Config& cfg, int indent) {
    return to_json_tree(cfg).dump(indent);
}

Config config_from_json(std::string_view json_text, const Config& base) {
    const json user = expand_dotted(parse_json(json_text, "config"));
    if (!user.is_object()) {
        throw InvalidArgument("config: top level must be an object");
    }
    json tree = to_json_tree(base);
    check_known(user, tree, "");
    tree.merge_patch(user);
    Config cfg;
    try {
        cfg = from_json_tree(tree);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void apply_override(Config& cfg, std::string_view dotted_key, std::string_view value_json) {
    json patch = json::object();
    patch[std::string(dotted_key)] = parse_json(value_json, "config override");
    cfg = config_from_json(patch.dump(), cfg);
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

double PolicyConfig::weight(int component) const {
    auto it = weights.find(component);
    return it == weights.end() ? 1.0 : it->second;
}

double PolicyConfig::threshold(int component) const {
    auto it = thresholds.find(component);
    return it == thresholds.end() ? std::numeric_limits<double>::infinity() : it->second;
}

void PolicyConfig::validate() const {
    for (const auto& [id, w] : weights) {
        if (!std::isfinite(w) || w < 0) {
            throw InvalidArgument("policy weight for component " + std::to_string(id) + " must be finite and >= 0");
        }
    }
    for (const auto& [id, t] : thresholds) {
        if (!std::isfinite(t)) {
            throw InvalidArgument("policy threshold for component " + std::to_string(id) + " must be finite");
        }
    }
    if (global_threshold && !std::isfinite(*global_threshold)) {
        throw InvalidArgument("policy global_threshold must be finite");
    }
}

namespace {

std::map<int, double> read_component_map(const json& j, const char* what) {
    std::map<int, double> out;
    if (j.is_null()) {
        return out;
    }
    if (!j.is_object()) {
        throw InvalidArgument(std::string("policy.") + what + " must be an object keyed by component id");
    }
    for (const auto& [key, value] : j.items()) {
        std::size_t used = 0;
        int id = 0;
        try {
            id = std::stoi(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size() || id < 0) {
            throw InvalidArgument(std::string("policy.") + what + ": bad component id '" + key + "'");
        }
        if (!value.is_number()) {
            throw InvalidArgument(std::string("policy.") + what + "." + key + " must be a number");
        }
        out[id] = value.get<double>();
    }
    return out;
}

} // namespace

PolicyConfig policy_from_json(std::string_view json_text) {
    json j = expand_dotted(parse_json(json_text, "policy"));
    if (!j.is_object()) {
        throw InvalidArgument("policy: top level must be an object");
    }
    if (j.contains("policy")) {
        if (j.size() != 1) {
            throw InvalidArgument("policy: unexpected keys next to 'policy'");
        }
        j = j.at("policy");
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "weights" && key != "thresholds" && key != "global_threshold" && key != "ignore_background") {
            throw InvalidArgument("unknown policy key '" + key + "'");
        }
    }
    PolicyConfig p;
    p.weights = read_component_map(j.value("weights", json()), "weights");
    p.thresholds = read_component_map(j.value("thresholds", json()), "thresholds");
    if (j.contains("global_threshold") && !j.at("global_threshold").is_null()) {
        if (!j.at("global_threshold").is_number()) {
            throw InvalidArgument("policy.global_threshold must be a number");
        }
        p.global_threshold = j.at("global_threshold").get<double>();
    }
    if (j.contains("ignore_background")) {
        if (!j.at("ignore_background").is_boolean()) {
            throw InvalidArgument("policy.ignore_background must be a boolean");
        }
        p.ignore_background = j.at("ignore_background").get<bool>();
    }
    p.validate();
    return p;
}

std::string policy_to_json(const PolicyConfig& policy, int indent) {
    json w = json::object();
    for (const auto& [id, v] : policy.weights) {
        w[std::to_string(id)] = v;
    }
    json t = json::object();
    for (const auto& [id, v] : policy.thresholds) {
        t[std::to_string(id)] = v;
    }
    json inner{{"weights", w},
               {"thresholds", t},
               {"global_threshold", policy.global_threshold ? json(*policy.global_threshold) : json()},
               {"ignore_background", policy.ignore_background}};
    return json{{"policy", inner}}.dump(indent);
}

} // namespace comad
