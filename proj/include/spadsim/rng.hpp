#ifndef SPADSIM_RNG_HPP
#define SPADSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace spadsim {

// One root seed per run; every stochastic process draws from its own
// substream, derived from (root seed, fixed stream id). Adding or removing a
// process therefore never perturbs the draws seen by the others, and a rerun
// with the same seed reproduces every file byte for byte.
enum class StreamId : std::uint64_t {
    source = 1,      // photon arrival process (cw gaps, pulse counts, offsets)
    dark = 2,        // dark-count arrival process
    detect = 3,      // per-photon-candidate detection Bernoulli
    traps = 4,       // per-detection trap fill counts and release offsets
    afterpulse = 5,  // per-release trigger Bernoulli
    jitter = 6,      // per-record timing jitter
    derive = 7,      // seed derivation for batch runs / sweep points
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a child seed; used for per-point seeds in sweeps and batch runs.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(splitmix64(root ^ 0xa5a5a5a5a5a5a5a5ULL) + index);
}

inline std::mt19937_64 make_substream(std::uint64_t root_seed, StreamId id) {
    const std::uint64_t s =
        splitmix64(splitmix64(root_seed) + static_cast<std::uint64_t>(id));
    return std::mt19937_64(s);
}

/// Uniform double in [0, 1). 53-bit mantissa, never returns 1.0.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Samplers are hand-rolled rather than taken from <random>'s distributions so
// that frozen regression values survive standard-library changes.

/// Exponential with the given mean (mean = 1/rate).
inline double sample_exponential(std::mt19937_64& rng, double mean) {
    return -mean * std::log1p(-uniform01(rng));
}

/// Standard normal via Box-Muller. Consumes exactly two uniforms per sample.
inline double sample_standard_normal(std::mt19937_64& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(6.283185307179586477 * u2);
}

/// Poisson sample: Knuth's product method below lambda = 64, Gaussian
/// approximation rounded to the nearest integer above it.
inline std::uint64_t sample_poisson(std::mt19937_64& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda <= 64.0) {
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01(rng);
        } while (p > limit);
        return k - 1;
    }
    const double x = lambda + std::sqrt(lambda) * sample_standard_normal(rng);
    return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
}

} // namespace spadsim

#endif
