#include "catch_amalgamated.hpp"

#include "comad/crf.hpp"
#include "comad/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <random>

using namespace comad;
using Catch::Matchers::WithinAbs;

namespace {

double max_abs_diff(const SegmentationField& a, const SegmentationField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    }
    return m;
}

} // namespace

TEST_CASE("crf is the identity without pairwise terms", "[crf]") {
    std::mt19937_64 rng(1);
    const Image img = fixture::blob_image(rng, 12, 10, 2, 3);
    const auto seg = fixture::random_field(rng, 12, 10, 3);
    CrfParams p;
    p.a = 0;
    p.b = 0;
    CHECK(crf_refine(seg, img, p) == seg);
    CrfParams q;
    q.iterations = 0;
    CHECK(crf_refine(seg, img, q) == seg);
}

TEST_CASE("crf output is a distribution per pixel", "[crf]") {
    std::mt19937_64 rng(2);
    for (auto mode : {CrfMode::Exact, CrfMode::Subsampled}) {
        const Image img = fixture::blob_image(rng, 20, 24, 3, 3);
        const auto seg = fixture::random_field(rng, 20, 24, 4);
        CrfParams p;
        p.mode = mode;
        const auto out = crf_refine(seg, img, p);
        for (std::size_t i = 0; i < out.pixel_count(); ++i) {
            double s = 0;
            for (int l = 0; l < 4; ++l) {
                REQUIRE(out.at(i, l) >= 0.0);
                s += out.at(i, l);
            }
            REQUIRE_THAT(s, WithinAbs(1.0, 1e-9));
        }
    }
}

TEST_CASE("exact crf matches the double-loop mean field", "[crf]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> labels;
        const int k = 2 + trial % 4;
        const Image img = fixture::blob_image(rng, 8, 8, 1 + trial % 3, 4, &labels);
        const auto seg = fixture::noisy_field(rng, labels, 8, 8, k);
        CrfParams p;
        p.mode = CrfMode::Exact;
        p.iterations = 1 + trial % 3;
        const auto got = crf_refine(seg, img, p);
        const auto want = oracle::meanfield_double_loop(seg, img, p);
        REQUIRE(max_abs_diff(got, want) <= 1e-6);
    }
}

TEST_CASE("crf is equivariant under label permutation", "[crf]") {
    std::mt19937_64 rng(4);
    std::vector<int> labels;
    const Image img = fixture::blob_image(rng, 16, 16, 3, 3, &labels);
    const auto seg = fixture::noisy_field(rng, labels, 16, 16, 4);
    const std::vector<int> perm{2, 0, 3, 1};
    SegmentationField permuted(16, 16, 4);
    for (std::size_t i = 0; i < seg.pixel_count(); ++i) {
        for (int l = 0; l < 4; ++l) {
            permuted.at(i, perm[l]) = seg.at(i, l);
        }
    }
    for (auto mode : {CrfMode::Exact, CrfMode::Subsampled}) {
        CrfParams p;
        p.mode = mode;
        const auto a = crf_refine(seg, img, p);
        const auto b = crf_refine(permuted, img, p);
        for (std::size_t i = 0; i < seg.pixel_count(); ++i) {
            for (int l = 0; l < 4; ++l) {
                REQUIRE_THAT(b.at(i, perm[l]), WithinAbs(a.at(i, l), 1e-6));
            }
        }
    }
}

TEST_CASE("crf smooths a flipped pixel inside a uniform region", "[crf]") {
    const Image img(9, 9, Rgb{100, 100, 100});
    SegmentationField seg(9, 9, 2);
    for (std::size_t i = 0; i < seg.pixel_count(); ++i) {
        seg.at(i, 0) = 0.8;
        seg.at(i, 1) = 0.2;
    }
    seg.at(40, 0) = 0.4;
    seg.at(40, 1) = 0.6;
    CrfParams p;
    p.mode = CrfMode::Exact;
    const auto out = crf_refine(seg, img, p);
    CHECK(out.at(40, 0) > 0.5);
}

TEST_CASE("subsampled crf is seed deterministic and close to exact", "[crf]") {
    std::mt19937_64 rng(5);
    std::vector<int> labels;
    const Image img = fixture::blob_image(rng, 32, 40, 3, 3, &labels);
    const auto seg = fixture::noisy_field(rng, labels, 32, 40, 3);
    CrfParams p;
    p.seed = 17;
    const auto a = crf_refine(seg, img, p);
    CHECK(crf_refine(seg, img, p) == a);
    p.mode = CrfMode::Exact;
    const auto e = crf_refine(seg, img, p);
    CHECK(max_abs_diff(a, e) <= 0.05);

    // Every pixel as a partner: only the smoothness window truncation remains.
    p.mode = CrfMode::Subsampled;
    p.sample_ratio = 1.0;
    CHECK(max_abs_diff(crf_refine(seg, img, p), e) <= 1e-3);
}

TEST_CASE("crf validation", "[crf]") {
    std::mt19937_64 rng(6);
    const Image img(4, 4);
    const auto seg = fixture::random_field(rng, 4, 5, 2);
    CHECK_THROWS_AS(crf_refine(seg, img, CrfParams{}), InvalidArgument);

    CrfParams p;
    p.theta_beta = 0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.iterations = -1;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.a = -1;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.sample_ratio = 0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = {};
    p.min_samples = 0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
