#include "gcp/rng.hpp"

#include <limits>

namespace gcp {

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = next();
    while (v >= limit)
        v = next();
    return v % n;
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view canvas_id, int sample_index, int attempt) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ fnv1a64(canvas_id));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(sample_index)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(attempt)) << 32));
    return h;
}

} // namespace gcp
