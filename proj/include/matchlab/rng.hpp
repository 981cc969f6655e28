#pragma once

// Counter-based random number generation. Every random quantity in the
// library draws from its own stream, keyed by (global seed, instance id,
// replication id, stream id). Streams are stateless to construct, cheap to
// split, and reproducible: the same key always yields the same sequence,
// independent of how many other streams were consumed. The generator is
// Philox4x32-10 (Salmon et al., SC 2011).

#include <cmath>
#include <cstdint>

#include "matchlab/core.hpp"

namespace matchlab {

namespace detail {

// Stateless SplitMix64 finalizer, used to derive Philox keys from stream
// coordinates.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Coordinates identifying one random stream.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t instance = 0;
  std::uint64_t replication = 0;
  std::uint64_t stream = 0;
};

// Well-known stream roles. Component indices (demand/supply type) are folded
// into the low bits of the stream id, so every vector component has its own
// substream and coupled states can re-read the same uniforms.
enum class StreamRole : std::uint64_t {
  DemandControl = 1,
  DemandTreated = 2,
  Supply = 3,
  Geometry = 4,
  Scratch = 5,
};

inline std::uint64_t stream_id(StreamRole role, std::uint64_t component = 0) {
  return (static_cast<std::uint64_t>(role) << 32) | component;
}

class RngStream {
 public:
  explicit RngStream(const StreamKey& key) {
    std::uint64_t h = detail::mix64(key.seed);
    h = detail::mix64(h ^ key.instance);
    h = detail::mix64(h ^ key.replication);
    h = detail::mix64(h ^ key.stream);
    key_[0] = static_cast<std::uint32_t>(h);
    key_[1] = static_cast<std::uint32_t>(h >> 32);
    const std::uint64_t iv = detail::mix64(h ^ 0x5851F42D4C957F2DULL);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(iv);
    ctr_[3] = static_cast<std::uint32_t>(iv >> 32);
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      philox_block();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                      std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void philox_block() {
    std::uint32_t c0 = ctr_[0], c1 = ctr_[1], c2 = ctr_[2], c3 = ctr_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mulhilo(kM0, c0, lo0, hi0);
      mulhilo(kM1, c2, lo1, hi1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW0;
      k1 += kW1;
    }
    buf_[0] = c0;
    buf_[1] = c1;
    buf_[2] = c2;
    buf_[3] = c3;
    // 128-bit counter increment.
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
  }

  std::uint32_t key_[2] = {0, 0};
  std::uint32_t ctr_[4] = {0, 0, 0, 0};
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int buf_pos_ = 4;
};

namespace detail {

// Sequential-search inversion; one uniform per draw, so streams sharing a
// key produce comonotone-coupled counts across different means. Intended
// for small means (time linear in the mean).
inline long poisson_inversion(double mean, RngStream& rng) {
  const double u = rng.next_double();
  double p = std::exp(-mean);
  double cum = p;
  long k = 0;
  const long cap = static_cast<long>(mean + 60.0 * std::sqrt(mean + 1.0) + 60.0);
  while (u > cum && k < cap) {
    ++k;
    p *= mean / static_cast<double>(k);
    cum += p;
  }
  return k;
}

// Transformed-rejection sampler for larger means (Hormann's PTRD). Exact,
// amortized ~1.1 uniforms per draw, but consumes a variable number of them.
inline long poisson_ptrd(double mean, RngStream& rng) {
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_sqrt_2pi = 0.91893853320467267;

  while (true) {
    double u, v = rng.next_double();
    if (v <= 0.86 * v_r) {
      u = v / v_r - 0.43;
      return static_cast<long>(
          std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + mean + 0.445));
    }
    if (v >= v_r) {
      u = rng.next_double() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = rng.next_double() * v_r;
    }
    const double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.445);
    if (kd < 0) continue;
    v = v * inv_alpha / (a / (us * us) + b);
    const long k = static_cast<long>(kd);
    if (k >= 10) {
      const double lhs = std::log(v * smu);
      const double rhs = (kd + 0.5) * std::log(mean / kd) - mean -
                         log_sqrt_2pi + kd -
                         (1.0 / 12.0 - 1.0 / (360.0 * kd * kd)) / kd;
      if (lhs <= rhs) return k;
    } else {
      if (std::log(v) <= kd * std::log(mean) - mean - std::lgamma(kd + 1.0))
        return k;
    }
  }
}

}  // namespace detail

// Mean threshold below which Poisson sampling uses single-uniform inversion
// (preserving comonotone coupling between streams that share a key) and
// above which it switches to rejection sampling.
inline constexpr double kPoissonInversionCutoff = 30.0;

enum class PoissonMethod { Auto, InversionOnly };

// Draws Poisson(mean) from the stream. `InversionOnly` keeps the
// one-uniform inversion at any mean; use it when counts must stay
// comonotone-coupled across different means (it costs O(mean) time and is
// numerically safe up to means of a few hundred, beyond which it falls back
// to a mean-shifted exact split).
inline long sample_poisson(double mean, RngStream& rng,
                           PoissonMethod method = PoissonMethod::Auto) {
  if (!(mean >= 0.0)) throw InputError("sample_poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (method == PoissonMethod::Auto)
    return mean < kPoissonInversionCutoff ? detail::poisson_inversion(mean, rng)
                                          : detail::poisson_ptrd(mean, rng);
  // Inversion-only mode: exp(-mean) underflows near mean ~ 700, so split
  // large means into a fixed chunk plus the remainder; the sum of the two
  // independent inversion draws is exact and still monotone in each uniform.
  constexpr double chunk = 500.0;
  long total = 0;
  double rest = mean;
  while (rest > chunk) {
    total += detail::poisson_inversion(chunk, rng);
    rest -= chunk;
  }
  return total + detail::poisson_inversion(rest, rng);
}

}  // namespace matchlab
