#include "catch_amalgamated.hpp"

#include "comad/counting.hpp"
#include "comad/dataset.hpp"
#include "comad/error.hpp"
#include "comad/png_io.hpp"
#include "comad/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <numeric>

using namespace comad;

namespace {

int total(const std::vector<int>& counts) { return std::accumulate(counts.begin(), counts.end(), 0); }

} // namespace

TEST_CASE("circle images: count, separation and colours", "[synth][circles]") {
    CircleSpec spec;
    for (int count = spec.min_count; count <= spec.max_count; ++count) {
        for (int index = 0; index < 5; ++index) {
            const auto c = gen_circle_image(spec, count, index);
            REQUIRE(c.count == count);
            REQUIRE(c.image.height() == spec.size);
            // Discs stay apart under 8-connectivity.
            REQUIRE(oracle::flood_fill_count(c.mask) == static_cast<std::size_t>(count));
            REQUIRE(connected_regions(c.mask, 0.0).size() == static_cast<std::size_t>(count));
            for (int y = 0; y < spec.size; y += 7) {
                for (int x = 0; x < spec.size; x += 7) {
                    const Rgb want = c.mask.at(y, x) ? spec.color : spec.background;
                    REQUIRE(c.image.at(y, x) == want);
                }
            }
        }
    }
}

TEST_CASE("circle images are deterministic per (spec, count, index)", "[synth][circles]") {
    CircleSpec spec;
    CHECK(gen_circle_image(spec, 5, 3).image == gen_circle_image(spec, 5, 3).image);
    CHECK_FALSE(gen_circle_image(spec, 5, 3).image == gen_circle_image(spec, 5, 4).image);
    spec.seed = 1;
    CHECK_FALSE(gen_circle_image(spec, 5, 3).image == gen_circle_image(CircleSpec{}, 5, 3).image);

    CircleSpec small;
    small.per_count = 2;
    small.min_count = 2;
    small.max_count = 4;
    const auto all = gen_circle_dataset(small);
    REQUIRE(all.size() == 6);
    CHECK(all[0].count == 2);
    CHECK(all[5].count == 4);

    CircleSpec crowded;
    crowded.size = 40;
    CHECK_THROWS_AS(gen_circle_image(crowded, 13, 0), DataError);
    crowded.min_count = 5;
    crowded.max_count = 4;
    CHECK_THROWS_AS(gen_circle_dataset(crowded), InvalidArgument);
}

TEST_CASE("circle dataset layout", "[synth][circles]") {
    fixture::TempDir dir;
    CircleSpec spec;
    write_circle_dataset(spec, 5, {4, 7}, 3, 2, dir.path());
    const auto ds = load_dataset(dir.path());
    CHECK(ds.train.size() == 3);
    CHECK(ds.test.size() == 6);
    CHECK(ds.category("count_7") == "logical");
    const auto mask = read_png_gray(dir.path() / "ground_truth" / "count_7" / "000.png");
    RegionMask m(mask.height(), mask.width(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        m.bits[i] = mask[i] > 0.5;
    }
    CHECK(oracle::flood_fill_count(m) == 7);
    CHECK_THROWS_AS(write_circle_dataset(spec, 5, {}, 0, 1, dir.path()), InvalidArgument);
}

TEST_CASE("product normals follow the spec", "[synth][product]") {
    const auto spec = ProductSpec::standard();
    CHECK_NOTHROW(spec.validate());
    std::vector<int> want;
    for (const auto& p : spec.parts) {
        want.push_back(p.count);
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = gen_product_normal(spec, seed);
        CHECK(p.counts == want);
        CHECK(p.image.height() == spec.size);
        CHECK(p.defect_region.area() == 0);
        for (std::size_t part = 0; part < spec.parts.size(); ++part) {
            CHECK(connected_regions(p.part_masks[part], 0.0).size() == static_cast<std::size_t>(want[part]));
        }
    }
    CHECK(gen_product_normal(spec, 4).image == gen_product_normal(spec, 4).image);
}

TEST_CASE("product defects", "[synth][product]") {
    const auto spec = ProductSpec::standard();
    const int normal_total = total(gen_product_normal(spec, 0).counts);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto base = gen_product_normal(spec, seed);

        const auto missing = gen_product_defect(spec, "missing", seed);
        CHECK(total(missing.counts) == normal_total - 1);
        CHECK(missing.base == base.image);
        CHECK(missing.defect_region.area() > 0);

        const auto extra = gen_product_defect(spec, "extra", seed);
        CHECK(total(extra.counts) == normal_total + 1);
        CHECK(extra.counts[spec.extra_part] == base.counts[spec.extra_part] + 1);

        const auto swap = gen_product_defect(spec, "color_swap", seed);
        CHECK(swap.counts == base.counts);
        CHECK_FALSE(swap.image == base.image);

        const auto size = gen_product_defect(spec, "size_change", seed);
        CHECK(size.counts == base.counts);
        std::size_t area_a = 0, area_b = 0;
        for (std::size_t p = 0; p < spec.parts.size(); ++p) {
            area_a += base.part_masks[p].area();
            area_b += size.part_masks[p].area();
        }
        CHECK(area_a != area_b);

        const auto scratch = gen_product_defect(spec, "scratch", seed);
        CHECK_FALSE(scratch.image == base.image);

        // Outside the defect region the pixels are untouched.
        for (const auto* d : {&missing, &extra, &swap, &size, &scratch}) {
            for (int y = 0; y < spec.size; ++y) {
                for (int x = 0; x < spec.size; ++x) {
                    if (!d->defect_region.at(y, x)) {
                        REQUIRE(d->image.at(y, x) == base.image.at(y, x));
                    }
                }
            }
        }
    }
    CHECK(defect_category("missing") == "logical");
    CHECK(defect_category("scratch") == "structural");
    CHECK_THROWS_AS(gen_product_defect(spec, "melted", 0), InvalidArgument);
}

TEST_CASE("product dataset splits and validation", "[synth][product]") {
    const auto ds = gen_product_dataset(fixture::product_spec(4, 3, 2, 9));
    CHECK(ds.train.size() == 4);
    CHECK(ds.test.size() == 3 + 4 * 2);
    CHECK(ds.train[0].key == "train/good/000.png");
    const auto again = gen_product_dataset(fixture::product_spec(4, 3, 2, 9));
    for (std::size_t i = 0; i < ds.test.size(); ++i) {
        CHECK(ds.test[i].image == again.test[i].image);
    }

    auto bad = ProductSpec::standard();
    bad.defects["melted"] = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = ProductSpec::standard();
    bad.n_train = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = ProductSpec::standard();
    bad.parts[0].centers.clear();
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = ProductSpec::standard();
    bad.extra_part = 17;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("seed derivation", "[synth]") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}
