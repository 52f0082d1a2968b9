#include "covert/rng.hpp"

#include <cmath>
#include <numbers>

namespace covert::rng {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t key) noexcept {
  for (auto& word : s_) {
    key += kGolden;
    word = mix64(key);
  }
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

Xoshiro256 substream(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t index) noexcept {
  const std::uint64_t base = mix64(seed + kGolden * (stream + 1));
  return Xoshiro256(mix64(base ^ (index * 0xD1B54A32D192ED03ULL + 1)));
}

std::pair<double, double> normal_pair(Xoshiro256& gen) noexcept {
  const double u1 = gen.uniform_pos();
  const double u2 = gen.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

double normal(Xoshiro256& gen) noexcept { return normal_pair(gen).first; }

std::uint64_t geometric(Xoshiro256& gen, double mean) noexcept {
  if (mean <= 0.0) return 0;
  const double q = mean / (1.0 + mean);
  const double u = gen.uniform_pos();
  if (u > q) return 0;
  // ln q = -log1p(1/mean) keeps precision for large means.
  return static_cast<std::uint64_t>(std::floor(std::log(u) / -std::log1p(1.0 / mean)));
}

std::uint64_t poisson(Xoshiro256& gen, double mean) noexcept {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    const double u = gen.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = gen.uniform() - 0.5;
    const double v = gen.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

double gamma(Xoshiro256& gen, double shape, double scale) noexcept {
  if (shape < 1.0) {
    const double boost = std::pow(gen.uniform_pos(), 1.0 / shape);
    return gamma(gen, shape + 1.0, scale) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal(gen);
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = gen.uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

}  // namespace covert::rng
