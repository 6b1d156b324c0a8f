#pragma once

// Counter-based generator: every draw is mix(seed, stream_a, stream_b, counter),
// so any stream can be evaluated independently and in any order.
// Mixer constants are the standard splitmix64 ones.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace devfp {

inline constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline constexpr uint64_t mix4(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC908ull);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x3C6EF372FE94F82Bull));
    return splitmix64(h ^ (c + 0xA54FF53A5F1D36F1ull));
}

// FNV-1a, used to turn prompt ids into request ids.
inline constexpr uint64_t hash_str(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    return h;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t a = 0, uint64_t b = 0) : seed_(seed), a_(a), b_(b) {}

    uint64_t next_u64() { return mix4(seed_, a_, b_, ctr_++); }
    double uniform() { return to_unit(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Integer in [0, n).
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }
    // Box-Muller, one normal per two draws (the sine branch is discarded).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t seed_, a_, b_;
    uint64_t ctr_ = 0;
};

}  // namespace devfp
