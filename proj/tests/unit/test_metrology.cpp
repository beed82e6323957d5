#include "catch_amalgamated.hpp"

#include "comad/error.hpp"
#include "comad/log.hpp"
#include "comad/metrology.hpp"
#include "oracles.hpp"

#include <random>

using namespace comad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("component features: area and mean b/a", "[metrology]") {
    const Image img(2, 3, std::vector<std::uint8_t>{255, 0, 0, 0, 0, 255, 0, 255, 0, //
                                                      120, 120, 120, 200, 150, 10, 0, 0, 0});
    const LabImage lab = rgb_to_lab(img);
    RegionMask mask(2, 3, 0);
    mask.bits = {1, 1, 0, 0, 1, 0};
    const auto f = component_features(mask, lab);
    CHECK(f.area == 3.0);
    CHECK_FALSE(f.empty);
    double want = 0;
    for (std::size_t i : {0u, 1u, 4u}) {
        const Lab p = lab.data()[i];
        want += p.b / p.a;
    }
    CHECK_THAT(f.color, WithinRel(want / 3.0, 1e-12));

    // Gray pixel: a = 0 is clamped to +eps, b = 0 gives 0.
    RegionMask gray(2, 3, 0);
    gray.bits = {0, 0, 0, 1, 0, 0};
    CHECK_THAT(component_features(gray, lab).color, WithinAbs(0.0, 1e-6));

    const auto empty = component_features(RegionMask(2, 3, 0), lab);
    CHECK(empty.empty);
    CHECK(empty.area == 0.0);
    CHECK(empty.color == 0.0);
    CHECK_THROWS_AS(component_features(RegionMask(3, 3, 0), lab), InvalidArgument);
}

TEST_CASE("signed clamp keeps the sign of a", "[metrology]") {
    LabImage lab(1, 2);
    lab.at(0, 0) = {50, -1e-6, 2.0};
    lab.at(0, 1) = {50, 1e-6, 2.0};
    RegionMask m(1, 2, 0);
    m.bits = {1, 0};
    CHECK_THAT(component_features(m, lab, 1e-3).color, WithinRel(-2000.0, 1e-12));
    m.bits = {0, 1};
    CHECK_THAT(component_features(m, lab, 1e-3).color, WithinRel(2000.0, 1e-12));
}

TEST_CASE("normalisation by training means", "[metrology]") {
    const std::vector<std::vector<ComponentFeatures>> train{
        {{100, 2, false}, {10, -1, false}},
        {{300, 4, false}, {30, -3, false}},
    };
    const auto n = fit_normalizers(train);
    CHECK(n.mean_area == std::vector<double>{200, 20});
    CHECK(n.mean_color == std::vector<double>{3, -2});
    CHECK(n.n_train == 2);

    const std::vector<ComponentFeatures> q{{400, 6, false}, {5, -2, false}};
    const auto nq = normalize(q, n);
    const auto g = build_global_vector(nq);
    CHECK(g == std::vector<double>{2.0, 2.0, 0.25, 1.0});
    CHECK(build_global_vector(nq, FeatureSet::Area) == std::vector<double>{2.0, 0.25});

    const std::vector<std::vector<ComponentFeatures>> zero_area{{{0, 1, true}}};
    try {
        fit_normalizers(zero_area);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.reason() == TrainingReason::ZeroMeanFeature);
    }
    const std::vector<std::vector<ComponentFeatures>> zero_color{{{5, 0, false}}};
    CHECK_THROWS_AS(fit_normalizers(zero_color), TrainingError);
    CHECK_NOTHROW(fit_normalizers(zero_color, FeatureSet::Area));
    CHECK_THROWS_AS(fit_normalizers(std::span<const std::vector<ComponentFeatures>>{}), TrainingError);
    CHECK(parse_feature_set("A") == FeatureSet::Area);
    CHECK(parse_feature_set("A+Co") == FeatureSet::AreaColor);
    CHECK_THROWS_AS(parse_feature_set("Co"), InvalidArgument);
}

TEST_CASE("knn score matches the full-sort oracle", "[knn]") {
    set_log_sink([](LogLevel, const std::string&) {});
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> rows_d(1, 40), dim_d(1, 8), k_d(1, 7);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> w(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        const int rows = rows_d(rng), dim = dim_d(rng), k = k_d(rng);
        VectorBank bank;
        std::vector<std::vector<double>> plain;
        for (int r = 0; r < rows; ++r) {
            std::vector<double> v(dim);
            for (auto& x : v) {
                x = trial % 5 == 0 ? std::round(n(rng)) : n(rng); // rounded values force ties
            }
            bank.push(v);
            plain.push_back(v);
        }
        std::vector<double> q(dim), wt;
        for (auto& x : q) {
            x = n(rng);
        }
        if (trial % 2) {
            for (int d = 0; d < dim; ++d) {
                wt.push_back(w(rng));
            }
        }
        std::optional<std::size_t> ex;
        if (rows > 1 && trial % 3 == 0) {
            ex = static_cast<std::size_t>(trial) % rows;
        }
        const auto got = knn_score(q, bank, k, wt, ex);
        const double want = oracle::knn_full_sort(q, plain, k, wt, ex);
        REQUIRE_THAT(got.score, WithinAbs(want, 1e-12));
        REQUIRE(got.k_used == std::min<std::size_t>(k, rows - (ex ? 1 : 0)));
        REQUIRE(std::is_sorted(got.distances.begin(), got.distances.end()));
        if (ex) {
            REQUIRE(std::find(got.neighbors.begin(), got.neighbors.end(), *ex) == got.neighbors.end());
        }
    }
}

TEST_CASE("knn validation", "[knn]") {
    VectorBank bank;
    bank.push(std::vector<double>{1, 2});
    const std::vector<double> q{0, 0};
    CHECK_THROWS_AS(knn_score(q, bank, 0), InvalidArgument);
    CHECK_THROWS_AS(knn_score(std::vector<double>{1}, bank, 1), InvalidArgument);
    CHECK_THROWS_AS(knn_score(q, bank, 1, std::vector<double>{1}), InvalidArgument);
    CHECK_THROWS_AS(knn_score(q, bank, 1, {}, std::size_t{0}), InvalidArgument);
    CHECK_THROWS_AS(bank.push(std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("attribution squares sum to the weighted distance to the neighbour mean", "[attribution]") {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> w(0, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const int comps = 1 + trial % 4;
        const int stride = 1 + trial % 2;
        VectorBank bank;
        for (int r = 0; r < 12; ++r) {
            std::vector<double> v(static_cast<std::size_t>(comps) * stride);
            for (auto& x : v) {
                x = n(rng);
            }
            bank.push(v);
        }
        std::vector<double> q(static_cast<std::size_t>(comps) * stride);
        for (auto& x : q) {
            x = n(rng);
        }
        std::vector<int> ids;
        std::vector<double> cw;
        for (int c = 0; c < comps; ++c) {
            ids.push_back(10 + c);
            cw.push_back(w(rng));
        }
        const auto knn = knn_score(q, bank, 5);
        const auto att = attribute(q, bank, knn.neighbors, stride, ids, cw);
        REQUIRE(att.size() == static_cast<std::size_t>(comps));

        double total = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            double mean = 0;
            for (auto nb : knn.neighbors) {
                mean += bank.row(nb)[i] / 5.0;
            }
            total += cw[i / stride] * (q[i] - mean) * (q[i] - mean);
        }
        double squares = 0;
        for (std::size_t i = 0; i < att.size(); ++i) {
            squares += att[i].contribution * att[i].contribution;
            REQUIRE(att[i].component == ids[att[i].slot]);
            if (i > 0) {
                REQUIRE(att[i - 1].contribution >= att[i].contribution);
            }
        }
        REQUIRE_THAT(squares, WithinRel(total, 1e-10));
    }
}
