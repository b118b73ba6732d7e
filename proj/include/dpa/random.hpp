#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dpa {

using Rng = std::mt19937_64;

/**
 * Independent generator for the stream addressed by (seed, path...).
 *
 * Streams are keyed by position rather than by draw order, so parallel or
 * reordered consumers see the same numbers: PA permutation i always uses
 * substream(seed, {i}) no matter which thread runs it.
 */
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (path.size() + 1));
    auto push = [&](std::uint64_t x) {
        words.push_back(static_cast<std::uint32_t>(x));
        words.push_back(static_cast<std::uint32_t>(x >> 32));
    };
    push(seed);
    for (auto id : path) {
        push(id);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

} // namespace dpa
