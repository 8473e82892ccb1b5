#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lagtess {

// Deterministic random stream. All variates are generated by explicit
// transformations of the raw 64-bit output so that sequences are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix(seed)) {}

    // Independent stream for a parallel chain / replicate.
    static Rng chain(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix(seed) + 0x9e3779b97f4a7c15ULL * (index + 1));
    }

    // Uniform on [0,1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0,n), n >= 1.
    std::uint64_t integer(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do { v = eng_(); } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller (one value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Poisson count by inversion (small means) or PTRS-free normal cutover.
    std::uint64_t poisson(double mean);

    std::uint64_t raw() { return eng_(); }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 60.0) {
        const double l = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }
    // split recursively; exact and still deterministic
    std::uint64_t half = poisson(mean * 0.5);
    return half + poisson(mean - mean * 0.5);
}

}  // namespace lagtess
