#pragma once

#include <cstdint>
#include <random>

namespace shotforge {

/// Seedable, replayable generator built on std::mt19937_64, whose output
/// sequence is fixed by the standard. Draws are derived from raw engine
/// output here (not through std:: distributions, which vary by vendor), so a
/// seed reproduces the same run on every toolchain.
///
/// Stream splitting: stream s of seed S is seeded with
/// std::seed_seq{lo32(S), hi32(S), lo32(s), hi32(s)}. The evolutionary loop
/// uses stream 0 for initialisation and stream g for generation g (g >= 1),
/// so a resumed run only needs the seed and the generation index.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    static Rng for_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(seed, stream); }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform integer in [0, n), unbiased. n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();
    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace shotforge
