#include "gdl/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gdl;

TEST_SUITE("rng") {

TEST_CASE("named streams are reproducible and distinct") {
    Rng a = Rng::stream(42, {name_key("extract"), 3, 7});
    Rng b = Rng::stream(42, {name_key("extract"), 3, 7});
    Rng c = Rng::stream(42, {name_key("extract"), 3, 8});
    Rng d = Rng::stream(43, {name_key("extract"), 3, 7});
    bool differs_c = false;
    bool differs_d = false;
    for (int i = 0; i < 16; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs_c |= x != c.next_u64();
        differs_d |= x != d.next_u64();
    }
    CHECK(differs_c);
    CHECK(differs_d);
}

TEST_CASE("key order matters") {
    CHECK(stream_seed(1, {2, 3}) != stream_seed(1, {3, 2}));
    CHECK(stream_seed(1, {}) != stream_seed(2, {}));
}

TEST_CASE("fnv-1a reference values") {
    // Published FNV-1a 64-bit test vectors.
    CHECK(name_key("") == 0xcbf29ce484222325ULL);
    CHECK(name_key("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(name_key("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("open uniforms stay strictly inside the unit interval") {
    Rng rng(5);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform_open();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("below is unbiased over a small range") {
    Rng rng(9);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        ++counts[rng.below(7)];
    }
    for (const int c : counts) {
        CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
    }
}

TEST_CASE("normal draws have unit moments") {
    Rng rng(11);
    double s = 0.0;
    double s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

} // TEST_SUITE
