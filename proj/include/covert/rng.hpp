#pragma once

#include <cstdint>
#include <utility>

// Portable random streams. Every distribution below is a fixed, documented
// algorithm on top of xoshiro256** so that a (seed, stream, index) triple
// produces the same variates on any platform; std:: distributions are not
// used because their algorithms are implementation-defined.
namespace covert::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** 1.0 (Blackman and Vigna).
class Xoshiro256 {
 public:
  /// State filled from a SplitMix64 sequence started at `key`.
  explicit Xoshiro256(std::uint64_t key) noexcept;

  std::uint64_t next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return 1.0 - uniform(); }

 private:
  std::uint64_t s_[4];
};

/// Counter-based substream: key = mix64(mix64(seed + G (stream + 1)) ^
/// (index * C + 1)) with G = 0x9E3779B97F4A7C15, C = 0xD1B54A32D192ED03.
/// Trial `index` of stream `stream` gets its own generator, so results do
/// not depend on how trials are scheduled.
Xoshiro256 substream(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t index) noexcept;

/// Box-Muller: r = sqrt(-2 ln u1), u1 in (0,1]; returns (r cos 2 pi u2,
/// r sin 2 pi u2).
std::pair<double, double> normal_pair(Xoshiro256& gen) noexcept;

/// First component of normal_pair.
double normal(Xoshiro256& gen) noexcept;

/// Bose-Einstein (geometric on 0,1,2,...) with the given mean, by inversion:
/// q = mean/(1+mean), u in (0,1]; returns 0 if u > q, else
/// floor(ln u / ln q).
std::uint64_t geometric(Xoshiro256& gen, double mean) noexcept;

/// Poisson: sequential CDF inversion for mean < 10, Hormann's PTRS
/// transformed rejection otherwise.
std::uint64_t poisson(Xoshiro256& gen, double mean) noexcept;

/// Gamma(shape, scale), Marsaglia-Tsang; shape < 1 boosted by u^{1/shape}.
double gamma(Xoshiro256& gen, double shape, double scale) noexcept;

}  // namespace covert::rng
