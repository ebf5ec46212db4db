#pragma once

#include <cmath>
#include <cstdint>

namespace s3w {

// Counter-based generator (SplitMix64 core with a per-stream increment).
// The k-th output depends only on (seed, stream, k), which gives two
// properties the library relies on everywhere:
//   - any operation taking an Rng& is reproducible from the seed alone;
//   - split() derives an independent child stream from a label without
//     consuming draws from the parent, so work distributed across threads
//     stays deterministic.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(seed ^ mix(stream + 0x1d8e4e27c47d124full))),
        gamma_(mix(stream ^ (seed * 0xa24baed4963ee407ull)) | 1ull),
        seed_(seed),
        stream_(stream) {}

  std::uint64_t next_u64() {
    state_ += gamma_;
    return mix(state_);
  }
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  // Child generator for a labeled subcomponent. Depends only on
  // (seed, stream, label), never on the parent's draw position.
  Rng split(std::uint64_t label) const {
    return Rng(seed_, mix(stream_ + 0x9e3779b97f4a7c15ull * (label + 1)));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double u01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe under log().
  double u01_open() {
    for (;;) {
      double u = u01();
      if (u > 0.0) return u;
    }
  }

  // Standard normal via Marsaglia's polar method; the pair partner is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    for (;;) {
      double a = 2.0 * u01() - 1.0;
      double b = 2.0 * u01() - 1.0;
      double s = a * a + b * b;
      if (s >= 1.0 || s == 0.0) continue;
      double f = std::sqrt(-2.0 * std::log(s) / s);
      spare_ = b * f;
      has_spare_ = true;
      return a * f;
    }
  }

  // Uniform in [0, n); rejection keeps it exact.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  std::uint64_t gamma_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace s3w
