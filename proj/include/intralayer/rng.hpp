#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace intralayer {

// 64-bit FNV-1a. std::hash is implementation-defined, so label hashing is
// spelled out to keep seed derivation stable everywhere.
inline uint64_t fnv1a64(std::string_view data, uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= 1099511628211ull;
    }
    return h;
}

// Seed for one (module, entity, epoch) substream. Every stochastic draw in a
// run comes from such a stream, so adding a module or replaying from a
// snapshot never shifts another module's draws.
inline uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t epoch) {
    uint64_t h = fnv1a64_u64(master, 14695981039346656037ull);
    h = fnv1a64(label, h);
    h = fnv1a64_u64(epoch, h);
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 53 bits of entropy.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be >= 1.
    uint64_t uniform_below(uint64_t n) {
        return engine_() % n;
    }

    // Box-Muller; always consumes exactly two uniforms.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace intralayer
