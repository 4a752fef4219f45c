#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace t2p {

// SplitMix64 step; used to decorrelate seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. We avoid std::*_distribution on purpose: their output
// is not specified bit-for-bit across standard libraries, and the spec-level
// determinism contracts are per-seed bit contracts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0,n) without modulo bias worth worrying about at our scales.
    int uniform_int(int n) { return n <= 0 ? 0 : static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

    // Box-Muller, cache-free so the stream position is predictable.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Derived independent stream.
    Rng fork(std::uint64_t stream) { return Rng(splitmix64(gen_() ^ splitmix64(stream))); }

private:
    std::mt19937_64 gen_;
};

}  // namespace t2p
