#include <doctest.h>

#include <algorithm>
#include <set>

#include "iosvqa/random.hpp"

using namespace iosvqa;

TEST_CASE("generator and hash reference values") {
    // 10000th output of a default-constructed mt19937_64, fixed by the C++ standard.
    Rng rng;
    rng.discard(9999);
    CHECK(rng() == 9981545732273789042ULL);
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("hash64 separates seed, key and index") {
    CHECK(hash64(1, "case") == hash64(1, "case"));
    CHECK(hash64(1, "case") != hash64(2, "case"));
    CHECK(hash64(1, "case") != hash64(1, "casf"));
    CHECK(hash64(1, "case", 0) != hash64(1, "case", 1));
}

TEST_CASE("uniform_below stays in range and hits every value") {
    Rng rng(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = uniform_below(rng, 7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(uniform_below(rng, 1) == 0);
}

TEST_CASE("sample_indices draws distinct indices first, then tops up") {
    const auto perm = sample_indices(5, 5, 42);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});

    const auto topped = sample_indices(3, 7, 42);
    REQUIRE(topped.size() == 7);
    CHECK(std::set<std::size_t>(topped.begin(), topped.begin() + 3).size() == 3);
    for (auto i : topped) CHECK(i < 3);

    CHECK(sample_indices(1000, 100, 9) == sample_indices(1000, 100, 9));
    CHECK(sample_indices(0, 4, 1).empty());
}

TEST_CASE("different seeds give different selections") {
    std::set<std::vector<std::size_t>> selections;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto s = sample_indices(1000, 100, seed);
        std::sort(s.begin(), s.end());
        selections.insert(s);
    }
    CHECK(selections.size() == 10);
}
