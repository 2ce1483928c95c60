#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace fedgcc {

// Counter-based splittable PRNG built on the splitmix64 finalizer.
//
//   key     = mix64(seed + GAMMA * (stream_id + 1))
//   word(i) = mix64(key  + GAMMA * (i + 1)),   i = 0, 1, 2, ...
//
// All arithmetic is mod 2^64; GAMMA = 0x9E3779B97F4A7C15. Uniform draws
// take the top 53 bits of a word, so the uniform sequence is bit-exact on
// every IEEE-754 platform. The full algorithm plus frozen test vectors is
// in docs/rng.md; reimplementations must match it bit for bit.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed),
          stream_id_(stream_id),
          key_(mix64(seed + kGamma * (stream_id + 1))) {}

    std::uint64_t next_u64() { return mix64(key_ + kGamma * (++counter_)); }

    /// Uniform double in [0, 1) with 53 significant bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw, Box-Muller over exactly two uniforms:
    /// z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2). No second-value caching.
    double next_normal() {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform index in [0, n). Clamped: u*n can round up to n when u is
    /// within an ulp of 1 and n is large.
    std::size_t next_index(std::size_t n) {
        const auto i =
            static_cast<std::size_t>(next_uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stream-id layout used across the simulator. Every consumer derives its
// stream from the experiment seed plus one of these offsets, so runs are
// reproducible regardless of thread scheduling.
namespace streams {
inline constexpr std::uint64_t kClientSampling = 0;
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kClientBatchBase = 100;   // + client index
inline constexpr std::uint64_t kSyntheticBase = 1000;    // + client index
}  // namespace streams

}  // namespace fedgcc
