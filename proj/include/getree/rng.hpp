#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace getree {

// splitmix64 finalizer, used to derive independent seeds from structured
// inputs (run index, generation, individual slot, ...).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next, Rest... rest) {
    return derive_seed(mix64(base) ^ next, rest...);
}

// Random stream with hand-rolled draws. Keeping the draw logic here (instead
// of std:: distributions) pins the byte stream down to the engine, so results
// reproduce across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // [0, n), n > 0
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool chance(double p) { return uniform01() < p; }

    // standard normal, Marsaglia polar method (no state carried between calls)
    double gaussian() {
        for (;;) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace getree
