#include "catch_amalgamated.hpp"

#include "comad/config.hpp"
#include "comad/error.hpp"

#include "json.hpp"

#include <cmath>

using namespace comad;
using json = nlohmann::json;

TEST_CASE("default configuration", "[config]") {
    const Config cfg;
    CHECK(cfg.segmentation.k == 5);
    CHECK(cfg.segmentation.temperature == 0.1);
    CHECK(cfg.segmentation.crf.a == 4.0);
    CHECK(cfg.segmentation.crf.b == 3.0);
    CHECK(cfg.segmentation.crf.theta_alpha == 67.0);
    CHECK(cfg.segmentation.crf.theta_beta == 3.0);
    CHECK(cfg.segmentation.crf.theta_gamma == 1.0);
    CHECK(cfg.segmentation.crf.iterations == 2);
    CHECK(cfg.features.stride == 8);
    CHECK(cfg.features.coreset_ratio == 0.01);
    CHECK(cfg.metrology.k == 5);
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.region.candidates == std::vector<double>{1.0, 1.1, 1.2, 1.3, 1.4});
    CHECK(cfg.counting.eps_frac == 0.10);
    CHECK(cfg.counting.min_samples == 10);
    CHECK(cfg.counting.min_area_frac == 0.001);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config json round trip", "[config]") {
    Config cfg;
    cfg.seed = 42;
    cfg.segmentation.crf_enabled = false;
    cfg.segmentation.crf.mode = CrfMode::Exact;
    cfg.region.method = RegionMethod::Argmax;
    cfg.metrology.features = FeatureSet::Area;
    cfg.counting.disabled_components = {1, 3};
    cfg.filter.reference_image = "train/good/007.png";
    const auto text = config_to_json(cfg);
    CHECK(config_from_json(text) == cfg);
    CHECK(config_to_json(config_from_json(text)) == text);
    // Canonical form: sorted keys, stable text.
    const auto j = json::parse(text);
    CHECK(j["segmentation"]["crf"]["enabled"] == false);
    CHECK(j["detector"]["alpha"] == 0.5);
}

TEST_CASE("nested and dotted overrides", "[config]") {
    const auto a = config_from_json(R"({"segmentation": {"k": 7, "crf": {"enabled": false}}})");
    CHECK(a.segmentation.k == 7);
    CHECK_FALSE(a.segmentation.crf_enabled);
    CHECK(a.segmentation.temperature == 0.1);

    const auto b = config_from_json(R"({"segmentation.k": 7, "segmentation.crf.enabled": false})");
    CHECK(a == b);

    Config c;
    apply_override(c, "detector.alpha", "0.25");
    apply_override(c, "features.extractor", "\"file\"");
    apply_override(c, "features.dir", "\"/tmp/x\"");
    CHECK(c.alpha == 0.25);
    CHECK(c.features.extractor == "file");

    // Merging over a non-default base keeps the base values.
    const auto d = config_from_json(R"({"seed": 3})", a);
    CHECK(d.segmentation.k == 7);
    CHECK(d.seed == 3);
}

TEST_CASE("config rejects bad input", "[config]") {
    CHECK_THROWS_AS(config_from_json(R"({"segmentation": {"kk": 3}})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"segmentation.crf_enabled": false})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"segmentation": 3})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"segmentation": {"k": "five"}})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"segmentation": {"k": 1}})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"segmentation.crf.mode": "fast"})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"region.method": "median"})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"region.candidates": []})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(R"({"filter.mean_filter_size": 4})"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json("[1, 2]"), InvalidArgument);
    CHECK_THROWS_AS(config_from_json("{"), InvalidArgument);
    Config c;
    CHECK_THROWS_AS(apply_override(c, "detector.alpha", "-1"), InvalidArgument);
    CHECK_THROWS_AS(apply_override(c, "detector.alpha", "not json"), InvalidArgument);
}

TEST_CASE("policy defaults and accessors", "[policy]") {
    PolicyConfig p;
    CHECK(p.weight(3) == 1.0);
    CHECK(std::isinf(p.threshold(3)));
    p.weights[3] = 0.0;
    p.thresholds[3] = 0.7;
    CHECK(p.weight(3) == 0.0);
    CHECK(p.threshold(3) == 0.7);
}

TEST_CASE("policy json forms", "[policy]") {
    PolicyConfig p;
    p.weights[1] = 0.5;
    p.thresholds[2] = 1.25;
    p.global_threshold = 3.0;
    p.ignore_background = true;
    const auto text = policy_to_json(p);
    CHECK(policy_from_json(text) == p);

    const auto inner = policy_from_json(R"({"weights": {"1": 0.5}, "thresholds": {"2": 1.25},
                                            "global_threshold": 3.0, "ignore_background": true})");
    CHECK(inner == p);

    const auto dotted = policy_from_json(R"({"policy.weights.1": 0.5, "policy.thresholds.2": 1.25,
                                             "policy.global_threshold": 3.0, "policy.ignore_background": true})");
    CHECK(dotted == p);

    const auto cleared = policy_from_json(R"({"policy": {"global_threshold": null}})");
    CHECK_FALSE(cleared.global_threshold.has_value());
}

TEST_CASE("policy validation", "[policy]") {
    CHECK_THROWS_AS(policy_from_json(R"({"weights": {"1": -0.5}})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"weights": {"x": 0.5}})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"weights": {"-1": 0.5}})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"weights": {"1": "big"}})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"weights": [1, 2]})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"ignore_background": 1})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"global_threshold": "high"})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"colour": 1})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json(R"({"policy": {}, "extra": 1})"), InvalidArgument);
    CHECK_THROWS_AS(policy_from_json("3"), InvalidArgument);
}
