#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace rsma {

// Every random draw in the library flows through this generator so that a
// given seed reproduces bit-identical streams regardless of platform RNG
// implementations or thread scheduling. SplitMix64 finalizer, public domain.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform on [0,1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // uniform on (0,1]; never zero so it is safe under log()
    double uniform_pos() { return (double(next() >> 11) + 1.0) * 0x1.0p-53; }

    // standard circularly-symmetric complex normal, E|z|^2 = 1
    std::complex<double> cnormal() {
        double r = std::sqrt(-std::log(uniform_pos()));
        double phi = 2.0 * std::numbers::pi * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }
};

// Order-sensitive seed derivation: child streams (per realization, per user,
// per stream role, ...) get seeds mixed from the parent seed and an index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t part) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull + (part << 1) + 1));
    std::uint64_t a = g.next();
    SplitMix64 h(a + part);
    return h.next();
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    return mix_seed(mix_seed(seed, a, b), c);
}

} // namespace rsma
