#pragma once

// Counter-based random numbers: Philox4x32-10 keyed by the run seed, with
// the counter naming (replica, cell, stream tag, block). Every cell of every
// replica owns an independent stream, so results do not depend on the order
// in which cells or replicas are generated.
//
// The variate transforms (ziggurat normals, Poisson inversion / PTRS) are
// written out here rather than taken from <random>, whose distributions are
// implementation-defined and would break cross-platform reproducibility.

#include <array>
#include <cmath>
#include <cstdint>

namespace sdfields {

using PhiloxBlock = std::array<std::uint32_t, 4>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

namespace detail {

// Ziggurat tables for the standard normal with 256 layers of equal area.
// Layer 0 is the base strip with the tail beyond r; layer i >= 1 spans
// [0, x[i]] between heights f(x[i]) and f(x[i + 1]), with x[256] = 0.
struct ZigguratTables {
  static constexpr int kLayers = 256;
  static constexpr double kR = 3.6541528853610088;
  static constexpr double kArea = 0.00492867323399;
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers + 1> f{};

  ZigguratTables() {
    auto pdf = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = kArea / pdf(kR);
    x[1] = kR;
    for (int i = 2; i < kLayers; ++i) x[i] = std::sqrt(-2.0 * std::log(kArea / x[i - 1] + pdf(x[i - 1])));
    x[kLayers] = 0.0;
    for (int i = 0; i <= kLayers; ++i) f[i] = pdf(x[i]);
    f[0] = pdf(kR);
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Stream tags separating the uses of one cell's counter space.
enum class StreamTag : std::uint32_t { basis = 0, process = 1, aux = 2 };

class CellRng {
 public:
  CellRng(std::uint64_t seed, std::uint64_t replica, std::uint64_t cell, StreamTag tag)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(replica),
             static_cast<std::uint32_t>(replica >> 32) ^ (static_cast<std::uint32_t>(cell >> 32) << 16),
             static_cast<std::uint32_t>(tag) << 28} {}

  std::uint64_t next_u64() {
    if (pos_ == 2) refill();
    const std::uint64_t v = (static_cast<std::uint64_t>(block_[2 * pos_]) << 32) | block_[2 * pos_ + 1];
    ++pos_;
    return v;
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by the ziggurat method.
  double normal() {
    const auto& z = detail::ziggurat();
    for (;;) {
      const std::uint64_t bits = next_u64();
      const int i = static_cast<int>(bits & 0xff);
      const bool negative = (bits >> 8) & 1u;
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
      double x = u * z.x[i];
      if (x < z.x[i + 1]) return negative ? -x : x;
      if (i == 0) {
        // Tail beyond r (Marsaglia's method).
        double t, y;
        do {
          t = -std::log(uniform()) / detail::ZigguratTables::kR;
          y = -std::log(uniform());
        } while (y + y < t * t);
        x = detail::ZigguratTables::kR + t;
        return negative ? -x : x;
      }
      if (z.f[i] + uniform() * (z.f[i + 1] - z.f[i]) < std::exp(-0.5 * x * x)) return negative ? -x : x;
    }
  }

  /// Poisson variate: inversion for small means, Hörmann's PTRS otherwise.
  std::uint64_t poisson(double mu) { return poisson(mu, mu < 10.0 ? std::exp(-mu) : 0.0); }

  /// Poisson variate with e^{-mu} supplied by the caller (used when mu < 10).
  std::uint64_t poisson(double mu, double exp_neg_mu) {
    if (!(mu > 0.0)) return 0;
    if (mu < 10.0) {
      double p = exp_neg_mu;
      double f = p;
      const double u = uniform();
      std::uint64_t k = 0;
      while (u > f && k < 1000) {
        ++k;
        p *= mu / static_cast<double>(k);
        f += p;
      }
      return k;
    }
    const double slam = std::sqrt(mu);
    const double loglam = std::log(mu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -mu + k * loglam - std::lgamma(k + 1.0))
        return static_cast<std::uint64_t>(k);
    }
  }

 private:
  void refill() {
    block_ = philox4x32_10(ctr_, key_);
    ++ctr_[3];  // the low 28 bits count blocks within the stream
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  PhiloxBlock ctr_;
  PhiloxBlock block_{};
  int pos_ = 2;
};

}  // namespace sdfields
