#pragma once

#include <cstdint>

namespace nerfstream {

// Small counter-free PRNG (splitmix64). Used everywhere randomness is
// needed so that runs reproduce bit-for-bit across platforms and standard
// library versions, which std::uniform_*_distribution does not guarantee.
class Rng {
 public:
    explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ull) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) { return next_u64() % n; }

    // Derive an independent stream, e.g. one per ray or per image.
    static Rng derive(uint64_t seed, uint64_t stream) {
        Rng mix(seed ^ (0x94d049bb133111ebull * (stream + 1)));
        mix.next_u64();
        return mix;
    }

    // Scalar mix of two seeds.
    static uint64_t mix(uint64_t a, uint64_t b) {
        Rng r(a ^ (0xbf58476d1ce4e5b9ull * (b + 1)));
        return r.next_u64();
    }

 private:
    uint64_t state_;
};

}  // namespace nerfstream
