#include "catch_amalgamated.hpp"

#include "comad/error.hpp"
#include "comad/model_io.hpp"
#include "fixtures.hpp"

#include <fstream>
#include <random>

using namespace comad;

namespace {

bool decode_fails_cleanly(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_model(bytes);
    } catch (const DecodeError&) {
        return true;
    } catch (const UnsupportedVersion&) {
        return true;
    }
    return false;
}

} // namespace

TEST_CASE("model round trip is exact", "[model_io]") {
    const auto& m = fixture::small_setup().model;
    const auto bytes = encode_model(m);
    REQUIRE(std::string(bytes.begin(), bytes.begin() + 4) == "CMAD");
    CHECK(decode_model(bytes) == m);
    CHECK(encode_model(decode_model(bytes)) == bytes);

    fixture::TempDir dir;
    save_model(m, dir.path() / "m.cmad");
    CHECK(load_model(dir.path() / "m.cmad") == m);
    // Saving over an existing file replaces it.
    save_model(m, dir.path() / "m.cmad");
    CHECK(read_file_bytes(dir.path() / "m.cmad") == bytes);
}

TEST_CASE("round-tripped model scores identically", "[model_io]") {
    const auto& setup = fixture::small_setup();
    const auto back = decode_model(encode_model(setup.model));
    for (const auto& item : setup.dataset.test) {
        const auto a = score(setup.model, item.image, item.key, {});
        const auto b = score(back, item.image, item.key, {});
        REQUIRE(a.d == b.d);
        REQUIRE(a.d_g == b.d_g);
        REQUIRE(a.d_h == b.d_h);
    }
}

TEST_CASE("model decode errors", "[model_io]") {
    const auto bytes = encode_model(fixture::small_setup().model);

    auto bad_magic = bytes;
    bad_magic[1] = 'X';
    try {
        decode_model(bad_magic);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.reason() == DecodeReason::BadMagic);
    }

    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(decode_model(version), UnsupportedVersion);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_model(trailing), DecodeError);

    CHECK_THROWS_AS(decode_model(std::vector<std::uint8_t>{}), DecodeError);

    // Every truncation fails with a decode error.
    for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 16) {
        REQUIRE(decode_fails_cleanly({bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len)}));
    }
}

TEST_CASE("corrupted models never crash", "[model_io]") {
    const auto bytes = encode_model(fixture::small_setup().model);
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
    std::uniform_int_distribution<int> val(0, 255);
    for (int trial = 0; trial < 300; ++trial) {
        auto b = bytes;
        for (int k = 0; k < 1 + trial % 4; ++k) {
            b[pos(rng)] = static_cast<std::uint8_t>(val(rng));
        }
        try {
            decode_model(b);
        } catch (const Error&) {
        }
    }
    SUCCEED();
}

TEST_CASE("model file errors", "[model_io]") {
    fixture::TempDir dir;
    CHECK_THROWS_AS(load_model(dir.path() / "none.cmad"), IoError);
    std::ofstream(dir.path() / "junk.cmad") << "hello";
    CHECK_THROWS_AS(load_model(dir.path() / "junk.cmad"), DecodeError);
    CHECK_THROWS_AS(save_model(fixture::small_setup().model, dir.path() / "no" / "such" / "dir" / "m.cmad"), IoError);
}
