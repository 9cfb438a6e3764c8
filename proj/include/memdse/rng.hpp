#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace memdse {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Per-call seed from (global seed, key, salt); independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t global, std::string_view key, std::int64_t salt) {
    return splitmix64(splitmix64(global) ^ splitmix64(fnv1a(key)) ^ splitmix64(static_cast<std::uint64_t>(salt) + 1));
}

/// mt19937_64 with hand-rolled distributions: the std distributions are not
/// bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool coin() { return (next() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
};

} // namespace memdse
