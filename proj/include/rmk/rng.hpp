#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rmk {

// Deterministic random stream with hierarchical splitting.
//
// Every consumer (init, shuffling, message sampling, attack placement,
// severity search) works on its own fork, keyed by purpose and step index.
// A fork depends only on the parent's key, never on how many values the
// parent has drawn, so optional consumers (e.g. the severity search) cannot
// shift anybody else's stream.
//
// Raw draws are derived directly from mt19937_64 outputs so results do not
// depend on the standard library's distribution implementations.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : key_(seed), eng_(seed) {}

    std::uint64_t key() const { return key_; }

    std::uint64_t u64() { return eng_(); }

    // Single unbiased bit (top bit of the tempered output).
    int bit() { return static_cast<int>(u64() >> 63); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            std::uint64_t r = u64();
            if (r >= threshold) return r % n;
        }
    }

    RngState fork(std::uint64_t tag) const { return RngState(mix(key_ ^ mix(tag ^ 0x9e3779b97f4a7c15ull))); }

    RngState fork(std::string_view label) const { return fork(fnv1a(label)); }

private:
    static std::uint64_t mix(std::uint64_t x) { // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t key_;
    std::mt19937_64 eng_;
};

inline RngState make_rng(std::uint64_t seed) { return RngState(seed); }

} // namespace rmk
