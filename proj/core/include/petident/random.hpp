#pragma once

// Portable deterministic randomness.
//
// Everything that must reproduce across platforms (fold shuffles, augmentation
// draws, fixture generation) goes through this header. The standard library
// engines have fully specified output sequences, but the distributions do not,
// so bounded integers and reals are derived here from raw 64-bit outputs:
//
//   seeding   SplitMix64 finalizer over (seed, stream) pairs
//   engine    std::mt19937_64
//   integers  rejection sampling on the top of the 64-bit range (unbiased)
//   reals     53 high bits scaled by 2^-53, giving [0, 1)
//   strings   FNV-1a 64-bit hash

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace petident {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent seed for a named sub-stream of `seed`.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform01();

    /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates, last element first.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace petident
