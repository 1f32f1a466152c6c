#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gmocap {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard and the transforms below avoid std::*_distribution (whose
// algorithms are implementation-defined), so streams are reproducible
// across platforms for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller; the pair is cached.
    double normal() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cache_ = r * std::sin(a);
        have_cache_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    std::mt19937_64 gen_;
    double cache_ = 0.0;
    bool have_cache_ = false;
};

// FNV-1a over raw bytes; used for content fingerprints in model files.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace gmocap
