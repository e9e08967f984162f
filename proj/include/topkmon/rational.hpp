#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace topkmon {

/// Exact rational in canonical form: gcd(num, den) == 1 and den > 0.
/// All comparisons cross-multiply in 128 bits, so quantities built from
/// stream values (<= 2^32 in every supported workload) and small epsilon
/// fractions never lose exactness.
class Rat {
public:
  constexpr Rat() = default;
  constexpr Rat(std::int64_t whole) : num_(whole) {}  // NOLINT: implicit by design

  Rat(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::invalid_argument("Rat: zero denominator");
    // INT64_MIN has no representable magnitude, which normalize() needs.
    if (num_ == std::numeric_limits<std::int64_t>::min() ||
        den_ == std::numeric_limits<std::int64_t>::min())
      throw std::overflow_error("Rat: magnitude too large");
    normalize();
  }

  static Rat of_value(std::uint64_t v) {
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      throw std::overflow_error("Rat: value too large");
    return Rat(static_cast<std::int64_t>(v));
  }

  /// Accepts "p/q" or a bare integer "p".
  static Rat parse(std::string_view text) {
    auto slash = text.find('/');
    try {
      if (slash == std::string_view::npos)
        return Rat(std::stoll(std::string(text)));
      std::int64_t p = std::stoll(std::string(text.substr(0, slash)));
      std::int64_t q = std::stoll(std::string(text.substr(slash + 1)));
      return Rat(p, q);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("Rat: cannot parse '" + std::string(text) + "'");
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("Rat: out of range '" + std::string(text) + "'");
    }
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Largest integer <= this.
  std::int64_t floor() const {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
  }

  /// Smallest integer >= this.
  std::int64_t ceil() const {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return q;
  }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return Rat(checked(i128(a.num_) * b.den_ + i128(b.num_) * a.den_),
               checked(i128(a.den_) * b.den_));
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return Rat(checked(i128(a.num_) * b.den_ - i128(b.num_) * a.den_),
               checked(i128(a.den_) * b.den_));
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return Rat(checked(i128(a.num_) * b.num_), checked(i128(a.den_) * b.den_));
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num_ == 0) throw std::domain_error("Rat: division by zero");
    return Rat(checked(i128(a.num_) * b.den_), checked(i128(a.den_) * b.num_));
  }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
  }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
  friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

  /// Comparisons against raw stream values, used on hot paths.
  friend bool operator<(const Rat& a, std::uint64_t v) { return a < Rat::of_value(v); }
  friend bool operator>(const Rat& a, std::uint64_t v) { return a > Rat::of_value(v); }
  friend bool operator<=(const Rat& a, std::uint64_t v) { return a <= Rat::of_value(v); }
  friend bool operator>=(const Rat& a, std::uint64_t v) { return a >= Rat::of_value(v); }
  friend bool operator<(std::uint64_t v, const Rat& a) { return Rat::of_value(v) < a; }
  friend bool operator>(std::uint64_t v, const Rat& a) { return Rat::of_value(v) > a; }
  friend bool operator<=(std::uint64_t v, const Rat& a) { return Rat::of_value(v) <= a; }
  friend bool operator>=(std::uint64_t v, const Rat& a) { return Rat::of_value(v) >= a; }

private:
  using i128 = __int128;

  static std::int64_t checked(i128 x) {
    if (x > std::numeric_limits<std::int64_t>::max() ||
        x < std::numeric_limits<std::int64_t>::min())
      throw std::overflow_error("Rat: arithmetic overflow");
    return static_cast<std::int64_t>(x);
  }

  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Smallest g >= 0 with 2^g >= x; x must be positive. Exact (no floating point).
inline int ceil_log2(const Rat& x) {
  if (x.num() <= 0) throw std::domain_error("ceil_log2: nonpositive argument");
  int g = 0;
  Rat pow(1);
  while (pow < x) {
    pow = pow * Rat(2);
    ++g;
    if (g > 127) throw std::overflow_error("ceil_log2: argument too large");
  }
  return g;
}

inline int ceil_log2(std::uint64_t x) {
  if (x == 0) throw std::domain_error("ceil_log2: zero");
  int g = 0;
  while ((std::uint64_t{1} << g) < x) {
    ++g;
    if (g >= 64) break;
  }
  return g;
}

}  // namespace topkmon
