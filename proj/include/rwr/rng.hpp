#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace rwr {

/// Names an independent random stream. Equal handles give equal sequences.
struct RngHandle {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  RngHandle with_stream(std::uint64_t stream) const { return {seed, stream}; }
  friend bool operator==(const RngHandle&, const RngHandle&) = default;
};

namespace streams {
inline constexpr std::uint64_t kSample = 0;
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kModel = 2;
inline constexpr std::uint64_t kFolds = 3;
inline constexpr std::uint64_t kVerify = 4;
}  // namespace streams

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Engine plus hand-rolled distributions. The std distributions are
/// implementation-defined, so they are avoided to keep draws identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(RngHandle handle) {
    std::uint64_t state = handle.seed ^ (handle.stream_id * 0xd1b54a32d192ed03ULL);
    std::uint64_t words[4];
    for (auto& w : words) w = detail::splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(words[0]), static_cast<std::uint32_t>(words[0] >> 32),
                      static_cast<std::uint32_t>(words[1]), static_cast<std::uint32_t>(words[1] >> 32),
                      static_cast<std::uint32_t>(words[2]), static_cast<std::uint32_t>(words[2] >> 32),
                      static_cast<std::uint32_t>(words[3]), static_cast<std::uint32_t>(words[3] >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rwr
