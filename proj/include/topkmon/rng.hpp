#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace topkmon {

/// Deterministic random source. mt19937_64 has a fully specified output
/// sequence, and the draws below avoid std::uniform_int_distribution (whose
/// mapping is implementation-defined), so a seed reproduces the same run on
/// any platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  /// Uniform draw from {0, ..., n-1} via rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    // Accept only draws under the largest multiple of n representable,
    // so every residue is equally likely.
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform draw from {lo, ..., hi}, inclusive.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::between: empty range");
    std::uint64_t span = hi - lo;
    if (span == std::uint64_t(-1)) return eng_();
    return lo + below(span + 1);
  }

  /// Coin that lands true with probability min(1, 2^r / n), exactly.
  bool coin_pow2(int r, std::uint64_t n) {
    if (r < 0 || n == 0) throw std::invalid_argument("Rng::coin_pow2: bad arguments");
    if (r >= 64 || (std::uint64_t{1} << r) >= n) return true;
    return below(n) < (std::uint64_t{1} << r);
  }

  bool coin_half() { return (eng_() & 1) != 0; }

private:
  std::mt19937_64 eng_;
};

}  // namespace topkmon
