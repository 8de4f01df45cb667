#include "petident/random.hpp"

#include <limits>

namespace petident {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ stream);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (auto c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double DeterministicRng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double DeterministicRng::uniform(double lo, double hi) {
    if (lo == hi) {
        engine_();  // keep the stream position independent of the range
        return lo;
    }
    return lo + (hi - lo) * uniform01();
}

std::uint64_t DeterministicRng::below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

}  // namespace petident
