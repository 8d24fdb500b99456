#pragma once

// Deterministic random number utilities.
//
// Every stochastic routine in the library takes an explicit 64-bit seed and
// derives independent streams with splitmix64, so results are reproducible
// bit-for-bit for a given seed regardless of call order. Streams that belong
// to a data object (a control sample, a region row) are derived from a hash
// of the data itself rather than from its position, which makes permutation
// symmetries (swap two controls, reorder regions) hold exactly.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <vector>

#include "ok/errors.hpp"

namespace ok::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Fold an arbitrary tag sequence into a fresh seed.
inline std::uint64_t derive(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t derive(std::uint64_t seed, std::uint64_t first, Rest... rest) {
    return derive(splitmix64(seed ^ splitmix64(first)), rest...);
}

// FNV-1a over the raw bytes of a double sequence; used for content-derived
// streams. Identical payloads hash identically, including signed zeros/NaNs
// by bit pattern.
inline std::uint64_t hash_doubles(std::span<const double> xs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// Order-independent combination for unordered pairs of streams.
inline std::uint64_t unordered_pair_tag(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a + b) ^ splitmix64(a ^ b);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InvalidRange("below(0)");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, scale=1), Marsaglia-Tsang; shape > 0.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw InvalidRange("gamma shape must be positive");
        if (shape < 1.0) {
            const double u = 1.0 - uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = 1.0 - uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ok::rng
