#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace vcat {

// splitmix64, used for seed derivation so that sub-streams are decorrelated
// even for adjacent master seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a over a string; a stable way to turn labels into derivation tags.
inline std::uint64_t hash_tag(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Seeded random stream. All distributions are generated with explicit
// algorithms (not std::*_distribution) so that a seed produces the same
// sequence on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(splitmix64(seed)), gen_(base_) {}

    // Derive an independent child stream. Streams for distinct tags are
    // decorrelated; deriving does not advance this stream.
    Rng derive(std::uint64_t tag) const {
        Rng child(0);
        child.base_ = splitmix64(base_ ^ splitmix64(tag + 0x6A09E667F3BCC909ULL));
        child.gen_.seed(child.base_);
        child.has_spare_ = false;
        return child;
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64
        return gen_() % n;
    }

    // Standard normal via Box-Muller. One value per call; the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates; fully specified given the stream state.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t base_ = 0;
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace vcat
