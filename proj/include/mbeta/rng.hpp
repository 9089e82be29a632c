#pragma once

// Seeded, splittable random streams. The core generator is xoshiro256++ with
// SplitMix64 state initialization keyed on (seed, stream_id), so identical
// keys reproduce identical bit streams on any platform. Derived variates
// (normal, gamma) go through the library's own inverse-CDF / rejection code
// and are stable up to libm rounding of exp/log/erfc.

#include <array>
#include <cmath>
#include <cstdint>

#include "mbeta/errors.hpp"
#include "mbeta/special.hpp"

namespace mbeta {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  std::uint64_t z = splitmix64(s);
  return z ^ splitmix64(s);
}

}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = detail::mix64(seed, stream_id);
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent stream keyed on this stream's identity and a caller tag.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, detail::mix64(stream_id_ + 0x632be59bd9b4e019ULL, tag));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return norm_quantile(uniform()); }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 boosted through
  // G(a) = G(a+1) * U^(1/a). shape == 0 yields an exact 0.
  double gamma(double shape) {
    require(shape >= 0.0, errc::domain_error, "gamma shape must be >= 0");
    if (shape == 0.0) return 0.0;
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_ = 0, stream_id_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace mbeta
