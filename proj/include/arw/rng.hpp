#pragma once

#include <cstdint>

namespace arw {

// Counter-based pseudo-randomness. Every random quantity in the library is a
// pure function of (seed, counter), so any stream can be replayed or read at
// a random offset without storing history.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Word `counter` of the stream identified by `stream`.
inline constexpr std::uint64_t counter_word(std::uint64_t stream, std::uint64_t counter) {
    return mix64(stream ^ (counter + 1) * kGolden);
}

/// Decorrelated sub-seed; `tag` distinguishes independent uses of one master
/// seed (instructions vs. driving vs. per-trial streams).
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    return mix64(mix64(master + kGolden) ^ (tag + 1) * 0xbf58476d1ce4e5b9ull);
}

// Stream tags used across the library.
inline constexpr std::uint64_t kTagInstructions = 1;
inline constexpr std::uint64_t kTagDriving = 2;
inline constexpr std::uint64_t kTagTrial = 3;
inline constexpr std::uint64_t kTagStationary = 4;
inline constexpr std::uint64_t kTagMisc = 5;

/// Uniform double in [0,1) from the top 53 bits of a word.
inline constexpr double u01(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0,n) (multiply-shift; bias < n/2^64).
inline constexpr std::uint64_t bounded(std::uint64_t word, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(word) * n) >> 64);
}

/// Small sequential generator for places where a stream position does not
/// need random access (Monte Carlo walks, bootstrap resampling).
class SplitMix {
  public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix64(state_);
    }
    double next_u01() { return u01(next()); }
    std::uint64_t next_below(std::uint64_t n) { return bounded(next(), n); }

  private:
    std::uint64_t state_;
};

}  // namespace arw
