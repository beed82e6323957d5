#include "catch_amalgamated.hpp"

#include "comad/error.hpp"
#include "comad/feature_bank.hpp"
#include "comad/feature_file.hpp"
#include "comad/png_io.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace comad;
using Catch::Matchers::WithinAbs;

namespace {

FeatureMap gaussian_map(std::mt19937_64& rng, int r, int c, int d) {
    std::normal_distribution<float> n(0.0f, 1.0f);
    std::vector<float> v(static_cast<std::size_t>(r) * c * d);
    for (auto& x : v) {
        x = n(rng);
    }
    return FeatureMap(r, c, d, std::move(v));
}

double sq(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

TEST_CASE("mock features: shape, determinism, flat patches", "[features]") {
    std::mt19937_64 rng(1);
    const Image img = fixture::blob_image(rng, 64, 48, 3, 4);
    const auto a = mock_extract(img, 8);
    CHECK(a.rows() == 8);
    CHECK(a.cols() == 6);
    CHECK(a.dim() == 7);
    CHECK(mock_extract(img, 8) == a);

    // A flat image has zero spread and zero gradient everywhere.
    const Image flat(16, 16, Rgb{120, 40, 200});
    const auto f = mock_extract(flat, 8);
    const Lab lab = rgb_to_lab(Rgb{120, 40, 200});
    for (std::size_t p = 0; p < f.patch_count(); ++p) {
        const auto v = f.vec(p);
        CHECK_THAT(v[0], WithinAbs(lab.l, 1e-4));
        CHECK_THAT(v[1], WithinAbs(lab.a, 1e-4));
        CHECK_THAT(v[2], WithinAbs(lab.b, 1e-4));
        for (int d = 3; d < 7; ++d) {
            CHECK_THAT(v[d], WithinAbs(0.0, 1e-4));
        }
    }
    CHECK_THROWS_AS(mock_extract(Image(4, 4), 8), InvalidArgument);
}

TEST_CASE("coreset: size, start point and farthest-point order", "[features][coreset]") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto fm = gaussian_map(rng, 9, 11, 4);
        const double ratio = 0.1 + 0.04 * trial;
        const auto s = coreset_sample(fm, ratio, 7);
        const auto n = static_cast<std::size_t>(std::floor(ratio * 99));
        REQUIRE(s.count() == n);
        REQUIRE(s.vectors.size() == n * 4);

        // First pick is the vector nearest the mean.
        std::vector<double> mean(4, 0.0);
        for (std::size_t p = 0; p < fm.patch_count(); ++p) {
            for (int d = 0; d < 4; ++d) {
                mean[d] += fm.vec(p)[d] / 99.0;
            }
        }
        auto to_mean = [&](std::size_t p) {
            double acc = 0;
            for (int d = 0; d < 4; ++d) {
                const double e = fm.vec(p)[d] - mean[d];
                acc += e * e;
            }
            return acc;
        };
        for (std::size_t p = 0; p < fm.patch_count(); ++p) {
            REQUIRE(to_mean(s.source_indices[0]) <= to_mean(p));
        }

        // Every later pick maximises the distance to the already chosen set.
        for (std::size_t t = 1; t < n; ++t) {
            auto dist_to_set = [&](std::size_t p) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t u = 0; u < t; ++u) {
                    best = std::min(best, sq(fm.vec(p), fm.vec(s.source_indices[u])));
                }
                return best;
            };
            const double chosen = dist_to_set(s.source_indices[t]);
            for (std::size_t p = 0; p < fm.patch_count(); ++p) {
                REQUIRE(dist_to_set(p) <= chosen + 1e-12);
            }
        }

        // Rows copy the source vectors.
        for (std::size_t t = 0; t < n; ++t) {
            for (int d = 0; d < 4; ++d) {
                REQUIRE(s.row(t)[d] == static_cast<double>(fm.vec(s.source_indices[t])[d]));
            }
        }
    }
}

TEST_CASE("coreset: indices are distinct and invalid ratios throw", "[features][coreset]") {
    std::mt19937_64 rng(3);
    const auto fm = gaussian_map(rng, 4, 4, 2);
    const auto all = coreset_sample(fm, 1.0, 0);
    std::vector<std::size_t> idx = all.source_indices;
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.size() == 16);
    CHECK_THROWS_AS(coreset_sample(fm, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(coreset_sample(fm, 1.5, 0), InvalidArgument);
    CHECK_THROWS_AS(coreset_sample(fm, 0.01, 0), InvalidArgument);
}

TEST_CASE("memory bank concatenates samples", "[features]") {
    std::mt19937_64 rng(4);
    const auto a = coreset_sample(gaussian_map(rng, 5, 5, 3), 0.2, 0);
    const auto b = coreset_sample(gaussian_map(rng, 5, 5, 3), 0.4, 0);
    const std::vector<SampledFeatures> both{a, b};
    const auto bank = build_memory_bank(both);
    CHECK(bank.rows() == a.count() + b.count());
    CHECK(bank.offsets == std::vector<std::size_t>{0, a.count()});
    CHECK(bank.row(a.count())[1] == b.row(0)[1]);
    CHECK_THROWS_AS(build_memory_bank(std::span<const SampledFeatures>{}), InvalidArgument);

    SampledFeatures odd = a;
    odd.dim = 2;
    const std::vector<SampledFeatures> mixed{a, odd};
    CHECK_THROWS_AS(build_memory_bank(mixed), InvalidArgument);
}

TEST_CASE("file extractor resolves keys", "[features][io]") {
    fixture::TempDir dir;
    std::mt19937_64 rng(5);
    const auto fm = gaussian_map(rng, 3, 3, 5);
    std::filesystem::create_directories(dir.path() / "test" / "good");
    write_feature_file(fm, dir.path() / "test" / "good" / "001.cfm");
    const auto other = gaussian_map(rng, 3, 3, 5);
    write_feature_file(other, dir.path() / "002.cfm");

    FileExtractor ex(dir.path(), 8);
    const Image img(24, 24);
    CHECK(ex.extract(img, "test/good/001.png") == fm);
    CHECK(ex.extract(img, "train/good/002.png") == other);
    CHECK_THROWS_AS(ex.extract(img, "test/good/003.png"), DataError);

    CHECK(make_extractor("mock", {}, 8)->name() == "mock");
    CHECK(make_extractor("file", dir.path(), 8)->name() == "file");
    CHECK_THROWS_AS(make_extractor("file", {}, 8), InvalidArgument);
    CHECK_THROWS_AS(make_extractor("dino", {}, 8), InvalidArgument);
}
