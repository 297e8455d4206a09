#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace iosvqa {

// All sampling goes through std::mt19937_64 (whose output sequence is fixed by
// the standard) and the bounded draw below, so results are identical across
// standard library implementations. std::uniform_int_distribution is not.
using Rng = std::mt19937_64;

// Uniform integer in [0, bound). bound must be > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-item seed derivation; independent of processing order.
inline std::uint64_t hash64(std::uint64_t seed, std::string_view key, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ fnv1a64(key));
    return splitmix64(h ^ index);
}

// Draws `count` indices from [0, population). The first min(count, population)
// draws are a partial Fisher-Yates shuffle (distinct indices); any further
// draws are uniform with replacement. Output is in draw order.
inline std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> out;
    if (population == 0) return out;
    out.reserve(count);
    Rng rng(seed);
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) pool[i] = i;
    const std::size_t distinct = count < population ? count : population;
    for (std::size_t i = 0; i < distinct; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, population - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    for (std::size_t i = distinct; i < count; ++i) {
        out.push_back(static_cast<std::size_t>(uniform_below(rng, population)));
    }
    return out;
}

} // namespace iosvqa
