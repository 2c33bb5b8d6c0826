#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gcp {

/// Engine plus the few draws the synthesis needs. The distributions are
/// written out here rather than taken from <random> because the standard
/// leaves their algorithms to the implementation; these are identical on
/// every toolchain, so a seed reproduces a dataset anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Uniform real in [0, 1) with 53 random bits.
    double unit();

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    bool bernoulli(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Stream seed for one (canvas, sample slot, attempt). Independent of
/// scheduling, so workers and retries reproduce exactly.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view canvas_id, int sample_index,
                                 int attempt);

} // namespace gcp
