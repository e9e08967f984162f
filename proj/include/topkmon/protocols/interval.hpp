#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "topkmon/model.hpp"
#include "topkmon/rational.hpp"

namespace topkmon {

/// Integer interval [lo, hi] bracketing where an undisturbed offline filter
/// boundary would have to sit. Empty once lo > hi; all narrowing protocols
/// drive it toward empty and treat that as proof the offline side moved.
struct GuessInterval {
  std::int64_t lo = 0;
  std::int64_t hi = -1;  // default-constructed interval is empty

  static GuessInterval of(std::int64_t lo, std::int64_t hi) { return {lo, hi}; }

  bool empty() const { return lo > hi; }

  /// hi - lo. Only meaningful on a nonempty interval.
  std::int64_t width() const {
    require_nonempty("width");
    return hi - lo;
  }

  /// Number of integers contained; 0 when empty.
  std::int64_t count() const { return empty() ? 0 : hi - lo + 1; }

  /// floor((lo+hi)/2), computed without overflow.
  std::int64_t midpoint() const {
    require_nonempty("midpoint");
    return lo + (hi - lo) / 2;
  }

  /// [lo, m]. Halving a single-point interval this way returns it unchanged;
  /// the upper half is what shrinks to empty in that case.
  GuessInterval lower_half() const { return {lo, midpoint()}; }

  /// [m+1, hi]. Empty when the interval held a single value.
  GuessInterval upper_half() const { return {midpoint() + 1, hi}; }

  /// Halving events follow the convention that a single-point interval
  /// halved in either direction becomes empty; the raw set operations
  /// above cannot express that for the lower side.
  GuessInterval halve_lower() const { return count() <= 1 ? GuessInterval{} : lower_half(); }
  GuessInterval halve_upper() const { return count() <= 1 ? GuessInterval{} : upper_half(); }

  /// Intersection with [-inf, v].
  GuessInterval clamp_above(std::int64_t v) const { return {lo, std::min(hi, v)}; }

  /// Intersection with [v, +inf].
  GuessInterval clamp_below(std::int64_t v) const { return {std::max(lo, v), hi}; }

  bool contains(std::int64_t v) const { return lo <= v && v <= hi; }

  std::string str() const {
    if (empty()) return "[]";
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
  }

  friend bool operator==(const GuessInterval& a, const GuessInterval& b) {
    if (a.empty() && b.empty()) return true;
    return a.lo == b.lo && a.hi == b.hi;
  }

 private:
  void require_nonempty(const char* who) const {
    if (empty()) throw std::logic_error(std::string("GuessInterval::") + who + ": empty interval");
  }
};

/// One narrowing update: a report from above at value v caps the interval at
/// v, a report from below lifts its floor to v.
inline GuessInterval generic_round(const GuessInterval& l, const Violation& report) {
  std::int64_t v = static_cast<std::int64_t>(report.value);
  if (report.value > static_cast<Value>(INT64_MAX))
    throw std::overflow_error("generic_round: value exceeds tracked range");
  return report.side == ViolationSide::from_above ? l.clamp_above(v) : l.clamp_below(v);
}

/// How far apart the interval ends still are, which picks the narrowing
/// strategy: probing in double-exponential jumps while u dwarfs l*l,
/// geometric-mean splitting while u > 4*l, plain midpoints while the ends
/// disagree by more than the slack factor, and holding still once
/// u <= l/(1-eps) makes a single two-filter layout stable.
enum class NarrowingPhase { double_exp, geometric, arithmetic, hold };

inline const char* to_string(NarrowingPhase p) {
  switch (p) {
    case NarrowingPhase::double_exp: return "double_exp";
    case NarrowingPhase::geometric: return "geometric";
    case NarrowingPhase::arithmetic: return "arithmetic";
    case NarrowingPhase::hold: return "hold";
  }
  return "?";
}

/// Classifies a nonempty interval. Checked in order, so exactly one phase
/// comes back even where the raw conditions overlap. The double_exp test is
/// the integer-exact form of "log log u exceeds log log l by more than 1"
/// and is declared false for l < 2, where that reading has no value.
inline NarrowingPhase phase_condition(const GuessInterval& l, const Rat& eps) {
  if (l.empty()) throw std::invalid_argument("phase_condition: empty interval");
  if (l.lo < 0) throw std::invalid_argument("phase_condition: negative interval");
  using i128 = __int128;
  if (l.lo >= 2 && static_cast<i128>(l.hi) > static_cast<i128>(l.lo) * l.lo)
    return NarrowingPhase::double_exp;
  if (static_cast<i128>(l.hi) > static_cast<i128>(4) * l.lo) return NarrowingPhase::geometric;
  // u > l/(1-eps), tested as u*(1-eps) > l to stay in exact arithmetic.
  if (Rat(l.hi) * (Rat(1) - eps) > Rat(l.lo)) return NarrowingPhase::arithmetic;
  return NarrowingPhase::hold;
}

}  // namespace topkmon
