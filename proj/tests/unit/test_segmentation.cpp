#include "catch_amalgamated.hpp"

#include "comad/error.hpp"
#include "comad/segmentation.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace comad;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> clustered_points(std::mt19937_64& rng, int per, int k, int dim) {
    std::normal_distribution<double> n(0.0, 0.3);
    std::vector<double> out;
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per; ++i) {
            for (int d = 0; d < dim; ++d) {
                out.push_back(5.0 * c * (d % 2 == 0 ? 1 : -1) + n(rng));
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("kmeans objective never increases", "[kmeans]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_real_distribution<double> u(-1, 1);
        std::vector<double> data(200 * 3);
        for (auto& v : data) {
            v = u(rng);
        }
        const auto res = kmeans(data, 3, 5, static_cast<std::uint64_t>(trial));
        REQUIRE(res.objective_history.size() >= 1);
        for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
            REQUIRE(res.objective_history[i] <= res.objective_history[i - 1] + 1e-9);
        }
        REQUIRE_THAT(oracle::kmeans_objective(data, 3, res.prototypes.centers),
                     WithinRel(res.objective_history.back(), 1e-9));
    }
}

TEST_CASE("kmeans reaches the exhaustive 2-means optimum on small sets", "[kmeans]") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-3, 3);
    std::uniform_int_distribution<int> count(3, 8);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = count(rng);
        const int dim = 1 + trial % 2;
        std::vector<double> data(static_cast<std::size_t>(n) * dim);
        for (auto& v : data) {
            v = u(rng);
        }
        const double best = oracle::kmeans2_bruteforce(data, dim);
        double found = std::numeric_limits<double>::infinity();
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto res = kmeans(data, dim, 2, seed);
            const double obj = oracle::kmeans_objective(data, dim, res.prototypes.centers);
            REQUIRE(obj >= best - 1e-9);
            found = std::min(found, obj);
        }
        REQUIRE_THAT(found, WithinAbs(best, 1e-9));
    }
}

TEST_CASE("kmeans separates clusters and is seed deterministic", "[kmeans]") {
    std::mt19937_64 rng(13);
    const auto data = clustered_points(rng, 30, 4, 2);
    const auto a = kmeans(data, 2, 4, 99);
    const auto b = kmeans(data, 2, 4, 99);
    CHECK(a.prototypes == b.prototypes);
    CHECK(a.labels == b.labels);
    for (int c = 0; c < 4; ++c) {
        const int label = a.labels[static_cast<std::size_t>(c) * 30];
        for (int i = 0; i < 30; ++i) {
            CHECK(a.labels[static_cast<std::size_t>(c) * 30 + i] == label);
        }
    }
}

TEST_CASE("kmeans input validation", "[kmeans]") {
    const std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(kmeans(three, 1, 4, 0), InvalidArgument);
    CHECK_THROWS_AS(kmeans(three, 2, 1, 0), InvalidArgument);
    CHECK_THROWS_AS(kmeans(three, 1, 0, 0), InvalidArgument);
    const std::vector<double> dup{1, 1, 1, 2};
    CHECK_THROWS_AS(kmeans(dup, 1, 3, 0), InvalidArgument);
    CHECK_NOTHROW(kmeans(dup, 1, 2, 0));
}

TEST_CASE("soft assignment equals the cosine softmax", "[assign]") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 2 + trial % 4;
        const int dim = 3 + trial % 5;
        ComponentPrototypes protos;
        protos.k = k;
        protos.dim = dim;
        for (int i = 0; i < k * dim; ++i) {
            protos.centers.push_back(n(rng));
        }
        std::vector<float> vals(static_cast<std::size_t>(3) * 4 * dim);
        for (auto& v : vals) {
            v = static_cast<float>(n(rng));
        }
        const FeatureMap fm(3, 4, dim, vals);
        const double temp = 0.05 + 0.05 * (trial % 3);
        const auto seg = assign_soft(fm, protos, temp);
        REQUIRE(seg.k() == k);
        REQUIRE(seg.height() == 3);
        REQUIRE(seg.width() == 4);
        for (std::size_t p = 0; p < fm.patch_count(); ++p) {
            std::vector<double> e(k);
            double z = 0;
            for (int c = 0; c < k; ++c) {
                double dot = 0, nf = 0, nc = 0;
                for (int d = 0; d < dim; ++d) {
                    const double f = fm.vec(p)[d];
                    const double cc = protos.center(c)[d];
                    dot += f * cc;
                    nf += f * f;
                    nc += cc * cc;
                }
                e[c] = std::exp(dot / std::sqrt(nf * nc) / temp);
                z += e[c];
            }
            for (int c = 0; c < k; ++c) {
                REQUIRE_THAT(seg.at(p, c), WithinAbs(e[c] / z, 1e-12));
            }
        }
    }
}

TEST_CASE("soft assignment edge cases", "[assign]") {
    ComponentPrototypes protos{3, 2, {1, 0, 0, 1, -1, 0}};
    const FeatureMap zero(1, 1, 2, std::vector<float>{0, 0});
    const auto seg = assign_soft(zero, protos, 0.1);
    for (int c = 0; c < 3; ++c) {
        CHECK_THAT(seg.at(0, c), WithinAbs(1.0 / 3.0, 1e-12));
    }
    const FeatureMap wrong(1, 1, 3, std::vector<float>{1, 2, 3});
    CHECK_THROWS_AS(assign_soft(wrong, protos, 0.1), InvalidArgument);
    CHECK_THROWS_AS(assign_soft(zero, protos, 0.0), InvalidArgument);
}

TEST_CASE("argmax labels break ties to the lowest id", "[assign]") {
    SegmentationField seg(1, 3, 3, {0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.1, 0.8});
    CHECK(argmax_labels(seg) == std::vector<int>{1, 0, 2});
}
