#pragma once

#include <cstdint>

namespace mltm {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over <random> engines because
// its output is fully specified -- the same seed yields the same stream on
// every platform -- and because independent substreams can be derived by seed
// mixing, which the trial-level parallelism below relies on.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) using the top 53 bits of one output word.
    // std::uniform_real_distribution is not reproducible across standard
    // library implementations, so the mapping is done by hand.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// SplitMix64's output finalizer as a standalone 64-bit mixer.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for the `index`-th substream of a master seed. Substreams are used one
// per Monte Carlo trial (and one per generated replicate in sweeps) so that
// results do not depend on scheduling or thread count.
inline uint64_t substream_seed(uint64_t master, uint64_t index) {
    return mix64(master ^ mix64(index + 1));
}

}  // namespace mltm
