#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "sfda/rng.hpp"

using namespace sfda;

TEST_CASE("philox known-answer vectors") {
    // Reference vectors from the Random123 distribution (kat_vectors,
    // philox4x32 with 10 rounds).
    auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    auto ones = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                  {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    auto pi = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u});
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and distinct") {
    RngStream a(7, kTagWeakView, 3, 1);
    RngStream b(7, kTagWeakView, 3, 1);
    RngStream c(7, kTagWeakView, 4, 1);
    bool all_equal = true, any_equal_c = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64();
        all_equal &= va == b.next_u64();
        any_equal_c |= va == c.next_u64();
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_c);
}

TEST_CASE("uniform lies in [0,1) and is roughly uniform") {
    RngStream rng(42, kTagSelect, 0, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of U(0,1): 0.5 +- 3 * (1/sqrt(12 n))
    CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("gaussian moments") {
    RngStream rng(9, kTagSelect, 1, 0);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("index is in range and covers values") {
    RngStream rng(1, kTagShuffle, 0);
    std::set<uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const uint64_t v = rng.index(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("stream id depends on every tag") {
    CHECK(stream_id(1, 2) != stream_id(2, 1));
    CHECK(stream_id(1) != stream_id(1, 0));
}
