#pragma once

#include <cmath>
#include <cstdint>

namespace typoflow {

// Deterministic splitmix64 generator. Used instead of <random> engines plus
// distributions because distribution output is not pinned by the standard and
// per-sample streams need to be derivable from (seed, counter).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Independent stream for sample index `n` under the same master seed.
    static Rng split(uint64_t seed, uint64_t n) {
        Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
        r.next_u64();
        return r;
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Rejection-free modulo is fine at these ranges.
    uint32_t next_below(uint32_t n) { return static_cast<uint32_t>(next_u64() % n); }

    // Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float next_float() { return static_cast<float>(next_double()); }

    // Standard normal via Box-Muller; deterministic across platforms.
    float next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = static_cast<float>(r * std::sin(a));
        have_spare_ = true;
        return static_cast<float>(r * std::cos(a));
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    float spare_ = 0.f;
};

// FNV-1a over a byte buffer; dataset integrity hashes.
inline uint64_t fnv1a64(const uint8_t* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace typoflow
