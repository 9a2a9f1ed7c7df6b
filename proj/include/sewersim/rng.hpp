#ifndef SEWERSIM_RNG_HPP
#define SEWERSIM_RNG_HPP

#include <cstdint>
#include <string_view>

namespace sewersim {

// Counter-based random streams: every draw is a pure function of the key
// material fed into the mixer, so results do not depend on call order,
// thread count, or how many other draws happened before.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

// FNV-1a, used to derive a stable stream key from component ids.
inline std::uint64_t hash_id(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t counter,
                                std::uint64_t salt = 0) {
    return mix64(mix64(master_seed + kGolden * (counter + 1)) ^ salt);
}

// Uniform double in [0, 1) from 53 high bits.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small splittable generator for sequential uses (synthetic networks).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix64(state_);
    }

    double next_double() { return uniform01(next()); }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

private:
    std::uint64_t state_;
};

} // namespace sewersim

#endif
