#pragma once

#include <cstdint>
#include <random>

namespace vgb {

// Mixes a 64-bit value into a well-spread seed (splitmix64 finalizer).
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG with value semantics. Wraps std::mt19937 (whose output
// sequence is fixed by the standard) and provides bounded draws that do not
// go through std distributions, which are implementation-defined.
class Rng {
public:
    Rng() : gen_(0) {}
    explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(mix_seed(seed))) {}

    uint32_t next_u32() { return gen_(); }

    // Uniform in [0, n). n must be >= 1. Modulo bias is irrelevant for the
    // tiny ranges used here (direction picks, tie breaks).
    int below(int n) { return static_cast<int>(next_u32() % static_cast<uint32_t>(n)); }

    // Uniform in [0, 1).
    double unit() { return next_u32() * (1.0 / 4294967296.0); }

    bool chance(double p) { return unit() < p; }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937 gen_;
};

} // namespace vgb
