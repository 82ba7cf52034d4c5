#ifndef SLTRUST_RNG_HPP
#define SLTRUST_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sltrust {

/// splitmix64 step; used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent engine from a master seed and a salt chain, so
/// every (run, stream) pair gets its own reproducible sequence regardless of
/// scheduling order.
inline std::mt19937_64 derive_stream(std::uint64_t master,
                                     std::initializer_list<std::uint64_t> salts) {
    std::uint64_t state = master;
    std::uint64_t mixed = splitmix64(state);
    for (std::uint64_t s : salts) {
        state ^= s + 0x9E3779B97F4A7C15ULL + (state << 6) + (state >> 2);
        mixed = splitmix64(state);
    }
    return std::mt19937_64(mixed);
}

}  // namespace sltrust

#endif  // SLTRUST_RNG_HPP
