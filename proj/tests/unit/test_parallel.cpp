#include "catch_amalgamated.hpp"

#include "comad/parallel.hpp"

#include <atomic>
#include <stdexcept>
#include <vector>

using comad::parallel_for;

TEST_CASE("parallel_for visits every index once", "[parallel]") {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
        std::vector<std::atomic<int>> hits(n);
        parallel_for(n, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) {
            REQUIRE(h.load() == 1);
        }
    }
}

TEST_CASE("parallel_for rethrows the lowest failing index", "[parallel]") {
    std::atomic<int> ran{0};
    try {
        parallel_for(100, [&](std::size_t i) {
            ++ran;
            if (i == 40 || i == 70) {
                throw std::runtime_error(std::to_string(i));
            }
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "40");
    }
    CHECK(ran.load() == 100);
}
