#include "catch_amalgamated.hpp"

#include "comad/error.hpp"
#include "comad/json_io.hpp"
#include "comad/render.hpp"
#include "fixtures.hpp"

#include "json.hpp"

#include <random>

using namespace comad;
using json = nlohmann::json;

TEST_CASE("rle round trip", "[json][rle]") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + trial % 13, w = 1 + trial % 17;
        RegionMask m(h, w, trial % 3);
        std::bernoulli_distribution on(0.05 * (trial % 20));
        for (auto& b : m.bits) {
            b = on(rng);
        }
        const auto runs = rle_encode(m);
        REQUIRE(runs.size() % 2 == 0);
        std::size_t covered = 0;
        for (std::size_t i = 0; i < runs.size(); i += 2) {
            REQUIRE(runs[i + 1] > 0);
            if (i > 0) {
                REQUIRE(runs[i] > runs[i - 2] + runs[i - 1]); // runs are maximal
            }
            covered += runs[i + 1];
        }
        REQUIRE(covered == m.area());
        REQUIRE(rle_decode(runs, h, w, m.component) == m);
    }
    const std::vector<std::uint32_t> odd{1};
    CHECK_THROWS_AS(rle_decode(odd, 2, 2), InvalidArgument);
    const std::vector<std::uint32_t> over{3, 2};
    CHECK_THROWS_AS(rle_decode(over, 2, 2), InvalidArgument);
}

TEST_CASE("report json", "[json]") {
    const auto& setup = fixture::small_setup();
    const auto& item = setup.dataset.test.front();
    auto r = score(setup.model, item.image, item.key, {});
    auto j = json::parse(report_to_json(r));
    CHECK(j["image_id"] == item.key);
    CHECK(j["D"].get<double>() == r.d);
    CHECK(j["D_G"].get<double>() == r.d_g);
    CHECK(j["D_H"].get<double>() == r.d_h);
    CHECK(j["decision"] == (r.anomalous ? "anomalous" : "normal"));
    CHECK(j["components"].size() == setup.model.kept_count());
    CHECK(j["components"][0]["threshold"].is_null());
    CHECK_FALSE(j.contains("classified"));
    CHECK_FALSE(j.contains("combined_score"));

    r.classified = ClassifiedAnomaly{-1, 2.0, 0.0, 3, 4};
    r.external_score = 1.5;
    r.combined_score = 2.5;
    j = json::parse(report_to_json(r));
    CHECK(j["classified"]["component"] == "background");
    CHECK(j["external_score"] == 1.5);
    CHECK(j["combined_score"] == 2.5);
}

TEST_CASE("model summary json", "[json]") {
    const auto& m = fixture::small_setup().model;
    const auto j = json::parse(model_summary_json(m));
    CHECK(j["k"] == 5);
    CHECK(j["k_kept"] == m.kept_count());
    CHECK(j["kept"].get<std::vector<int>>() == m.reserved.kept);
    CHECK(j["components"].size() == m.kept_count());
    CHECK(j["training"]["images"] == 12);
    CHECK(j["config"]["segmentation"]["crf"]["enabled"] == false);
}

TEST_CASE("masks json and overlay", "[json][render]") {
    const auto& setup = fixture::small_setup();
    const auto& item = setup.dataset.test.front();
    const auto a = analyze(setup.model, item.image, item.key);
    const auto j = json::parse(masks_to_json(a));
    CHECK(j["height"] == 224);
    CHECK(j["width"] == 224);
    REQUIRE(j["masks"].size() == a.masks.size());
    for (std::size_t s = 0; s < a.masks.size(); ++s) {
        const auto runs = j["masks"][s]["rle"].get<std::vector<std::uint32_t>>();
        CHECK(rle_decode(runs, 224, 224, a.masks[s].component) == a.masks[s]);
        CHECK(j["masks"][s]["area"] == a.masks[s].area());
    }

    const auto overlay = render_overlay(a.image, *a.seg, setup.model.reserved.kept);
    CHECK(overlay.height() == 224);
    CHECK_FALSE(overlay == a.image);
    CHECK(component_color(0) == component_color(8));
    CHECK_FALSE(component_color(0) == component_color(1));
}
