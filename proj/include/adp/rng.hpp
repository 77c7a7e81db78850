#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "adp/errors.hpp"

namespace adp {

namespace detail {

// Fixed-point finalizer (splitmix64). Bijective on u64.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

// Counter-based pseudo-random stream. Draw i is a stateless hash of
// (seed, stream_id, i), so a sequence replays identically no matter which
// thread consumes it, and distinct stream_ids are independent for free.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(detail::mix64(detail::mix64(seed ^ 0x5851f42d4c957f2dULL) ^
                           detail::mix64(stream_id + 0x14057b7ef767814fULL))) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  // Uniform on the open interval (0,1): the 53-bit mantissa is offset by
  // half an ulp, so 0 and 1 are unreachable and -log(u) is always finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exp(rate) waiting time by inversion.
  double exponential(double rate) {
    if (!(rate > 0.0)) throw Error("exponential: rate must be positive");
    return -std::log(uniform()) / rate;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw Error("uniform_int: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Index draw from an (approximately normalized) pmf. Falls back to the
  // last strictly positive entry if rounding leaves the draw uncovered.
  int categorical(const std::vector<double>& pmf) {
    if (pmf.empty()) throw DegeneratePmf("categorical: empty pmf");
    const double u = uniform();
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      if (pmf[i] < 0.0) throw DegeneratePmf("categorical: negative mass");
      if (pmf[i] > 0.0) last_positive = static_cast<int>(i);
      cum += pmf[i];
      if (u < cum) return static_cast<int>(i);
    }
    if (last_positive < 0) throw DegeneratePmf("categorical: all mass zero");
    return last_positive;
  }

  // Exact Poisson draw. Product method for small means; large means are
  // split into chunks so the exp() argument stays representable.
  long long poisson(double mean) {
    if (!(mean >= 0.0)) throw Error("poisson: mean must be nonnegative");
    long long total = 0;
    while (mean > 500.0) {
      total += poisson_small(500.0);
      mean -= 500.0;
    }
    return total + poisson_small(mean);
  }

 private:
  long long poisson_small(double mean) {
    const double floor_p = std::exp(-mean);
    long long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > floor_p);
    return k - 1;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace adp
