#ifndef MOTIFCODE_RNG_HPP
#define MOTIFCODE_RNG_HPP

#include <cstdint>
#include <random>

namespace motif {

// All randomness in a run flows from one of these, seeded from the config.
// mt19937_64 keeps identical runs bit-identical on one platform.
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Uniform integer in [lo, hi], inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace motif

#endif
