#pragma once

#include <cmath>
#include <cstdint>

namespace ascma {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Self-contained random stream (xoshiro256++ seeded via splitmix64).
// Gaussian draws use the Marsaglia polar method, so replaying a seed gives
// bit-identical sequences independent of the standard library's
// distribution internals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = detail::splitmix64_next(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable substream derivation. Children of a base seed are keyed by a purpose
// tag plus an index, so e.g. the noise draw of evaluation k lives in its own
// stream no matter how many draws other components consumed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t s = base;
  std::uint64_t h = detail::splitmix64_next(s);
  s ^= tag * 0x9e3779b97f4a7c15ULL + h;
  h ^= detail::splitmix64_next(s);
  s ^= index * 0xd1342543de82ef95ULL + h;
  return detail::splitmix64_next(s);
}

namespace stream_tag {
inline constexpr std::uint64_t init = 0x494e4954;   // run initialization point
inline constexpr std::uint64_t ask = 0x41534b00;    // candidate sampling
inline constexpr std::uint64_t noise = 0x4e4f4953;  // per-evaluation measurement noise
}  // namespace stream_tag

}  // namespace ascma
