#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace hamiltonia {

/// Identifies one reproducible random stream.  Identical (master, stream)
/// pairs yield bit-identical draws on every platform.
struct RngSeed {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;
};

namespace detail {
// SplitMix64 finalizer (Steele, Lea & Vigna, 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

/// Counter-based generator: the SplitMix64 sequence started from a hashed
/// (master, stream) state.  Hashing the start state makes distinct streams
/// begin at pseudo-random positions of the 2^64 cycle, so overlap between
/// the short streams used here is negligible.  Normal deviates come from
/// Box-Muller on the 53-bit uniforms; the algorithm is fixed per repo so
/// all Monte Carlo output is reproducible across platforms and compilers.
class RngStream {
public:
    explicit RngStream(RngSeed seed)
        : state_(detail::mix64(detail::mix64(seed.master ^ 0x9E3779B97F4A7C15ULL) ^
                               detail::mix64(seed.stream + 0xD1B54A32D192ED03ULL))),
          cache_(0.0),
          has_cache_(false) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return detail::mix64(state_);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal deviate (Box-Muller, pair cached).
    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    /// Complex coefficient with Re, Im ~ N(0, 1/2) independent.
    std::complex<double> normal_complex_halfvar() {
        const double re = normal() * 0.70710678118654752440;
        const double im = normal() * 0.70710678118654752440;
        return {re, im};
    }

private:
    std::uint64_t state_;
    double cache_;
    bool has_cache_;
};

/// Derives a child stream id from structured indices (trial, cube, ...),
/// so parallel workers draw from provably disjoint streams.
inline std::uint64_t substream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
    std::uint64_t s = detail::mix64(base ^ 0x8BB84B93962EACC9ULL);
    s = detail::mix64(s ^ (a + 0x2545F4914F6CDD1DULL));
    s = detail::mix64(s ^ (b + 0x9E6C63D0876A9A61ULL));
    s = detail::mix64(s ^ (c + 0xE7037ED1A0B428DBULL));
    return s;
}

}  // namespace hamiltonia
