#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "topkmon/comms.hpp"
#include "topkmon/protocols/events.hpp"
#include "topkmon/protocols/interval.hpp"
#include "topkmon/protocols/protocol.hpp"

namespace topkmon {

/// floor(sqrt(a)) by Newton iteration, wide enough for products of two
/// int64 interval ends.
inline std::int64_t isqrt_u128(unsigned __int128 a) {
  if (a == 0) return 0;
  int bits = 0;
  for (unsigned __int128 t = a; t > 0; t >>= 1) ++bits;
  unsigned __int128 x = static_cast<unsigned __int128>(1) << ((bits + 1) / 2);
  for (;;) {
    unsigned __int128 y = (x + a / x) / 2;
    if (y >= x) break;
    x = y;
  }
  return static_cast<std::int64_t>(x);
}

/// Epoch driver for streams whose k-th and (k+1)-st values sit clearly
/// apart. The output set is frozen at the start; a single boundary m
/// separates members ([m, inf]) from the rest ([0, m]) and chases the
/// offline filter boundary through progressively gentler narrowing
/// phases until the interval collapses or the hold layout survives.
class ScatteredRun {
 public:
  ScatteredRun(int n, int k, Rat eps, Rng& rng, CostLedger& ledger, EventLog* log = nullptr)
      : n_(n), k_(k), eps_(std::move(eps)), rng_(rng), ledger_(ledger), log_(log),
        filters_(static_cast<std::size_t>(n)), is_member_(static_cast<std::size_t>(n), 0) {
    if (k < 1 || k >= n) throw std::invalid_argument("ScatteredRun: need 1 <= k < n");
  }

  /// Probe the k+1 leaders and set up the first boundary.
  void start(Time t, const std::vector<Value>& values) {
    start_with_probe(t, top_k_plus_one(values, k_, rng_, ledger_));
  }

  /// Same, but with a ranking the dispatching monitor already paid for.
  void start_with_probe(Time t, const std::vector<std::pair<NodeId, Value>>& ranked) {
    if (static_cast<int>(ranked.size()) < k_ + 1)
      throw std::invalid_argument("ScatteredRun: ranking too short");
    t_start_ = t;
    members_.clear();
    std::fill(is_member_.begin(), is_member_.end(), 0);
    for (int j = 0; j < k_; ++j) {
      members_.push_back(ranked[static_cast<std::size_t>(j)].first);
      is_member_[static_cast<std::size_t>(ranked[static_cast<std::size_t>(j)].first - 1)] = 1;
    }
    std::sort(members_.begin(), members_.end());
    Value vk = ranked[static_cast<std::size_t>(k_ - 1)].second;
    Value vk1 = ranked[static_cast<std::size_t>(k_)].second;
    if (vk > static_cast<Value>(INT64_MAX))
      throw std::overflow_error("ScatteredRun: value exceeds tracked range");
    l_ = GuessInterval::of(static_cast<std::int64_t>(vk1), static_cast<std::int64_t>(vk));
    enter_phase(phase_condition(l_, eps_));
    set_boundary_filters(t);
  }

  /// Process every violation of step t. Returns the stop reason if the
  /// epoch ended within this step, nullopt once the step went quiet.
  std::optional<StopReason> on_step(Time t, const std::vector<Value>& values) {
    int guard = 0;
    const int cap = 16 * n_ + 64;
    for (;;) {
      ViolationReport rep = report_violations(filters_, values, rng_, ledger_);
      if (!rep.any()) return std::nullopt;
      if (++guard > cap) throw std::logic_error("ScatteredRun: violation loop did not settle");
      const Violation& v = rep.first();
      emit(log_, t, "violation", v.id,
           std::string(to_string(v.side)) + " v=" + std::to_string(v.value));
      auto res = handle(t, v);
      if (res) return res;
    }
  }

  const std::vector<Filter>& filters() const { return filters_; }
  const std::vector<NodeId>& output() const { return members_; }
  NarrowingPhase phase() const { return phase_; }
  const GuessInterval& interval() const { return l_; }
  std::int64_t boundary() const { return m_; }
  int round() const { return r_; }
  Time start_time() const { return t_start_; }

 private:
  void enter_phase(NarrowingPhase p) {
    phase_ = p;
    r_ = 0;
    ell0_ = l_.empty() ? 0 : l_.lo;
  }

  std::optional<StopReason> handle(Time t, const Violation& v) {
    l_ = generic_round(l_, v);
    if (phase_ == NarrowingPhase::hold) {
      // The resting layout is [l, inf] / [0, u]; any report at all lands
      // outside [l, u] and empties the interval directly.
      assert(l_.empty());
      return StopReason::interval_empty;
    }
    if (l_.empty()) return StopReason::interval_empty;
    NarrowingPhase np = phase_condition(l_, eps_);
    if (np == phase_) {
      if (phase_ == NarrowingPhase::double_exp) ++r_;
    } else {
      enter_phase(np);
    }
    set_boundary_filters(t);
    return std::nullopt;
  }

  std::int64_t current_boundary() const {
    switch (phase_) {
      case NarrowingPhase::double_exp: {
        // l0 + 2^(2^r), capped at the interval's top; the exponent
        // saturates once the jump would clear any int64 anyway.
        if (r_ >= 6) return l_.hi;
        __int128 jump = static_cast<__int128>(1) << (1 << r_);
        __int128 m = static_cast<__int128>(ell0_) + jump;
        return m >= static_cast<__int128>(l_.hi) ? l_.hi : static_cast<std::int64_t>(m);
      }
      case NarrowingPhase::geometric:
        return isqrt_u128(static_cast<unsigned __int128>(l_.lo) *
                          static_cast<unsigned __int128>(l_.hi));
      case NarrowingPhase::arithmetic:
        return l_.midpoint();
      case NarrowingPhase::hold:
        break;
    }
    throw std::logic_error("ScatteredRun: no boundary in hold");
  }

  void set_boundary_filters(Time t) {
    if (phase_ == NarrowingPhase::hold) {
      for (int i = 0; i < n_; ++i)
        filters_[static_cast<std::size_t>(i)] =
            is_member_[static_cast<std::size_t>(i)] ? Filter::at_least(Rat(l_.lo))
                                                    : Filter::at_most(Rat(l_.hi));
      m_ = l_.lo;
    } else {
      m_ = current_boundary();
      for (int i = 0; i < n_; ++i)
        filters_[static_cast<std::size_t>(i)] =
            is_member_[static_cast<std::size_t>(i)] ? Filter::at_least(Rat(m_))
                                                    : Filter::at_most(Rat(m_));
    }
    ledger_.count_broadcast();
    emit(log_, t, "broadcast", 0,
         std::string("scattered ") + to_string(phase_) + " L=" + l_.str() +
             " m=" + std::to_string(m_));
  }

  int n_;
  int k_;
  Rat eps_;
  Rng& rng_;
  CostLedger& ledger_;
  EventLog* log_;

  std::vector<Filter> filters_;
  std::vector<char> is_member_;
  std::vector<NodeId> members_;
  GuessInterval l_;
  NarrowingPhase phase_ = NarrowingPhase::hold;
  std::int64_t m_ = 0;
  std::int64_t ell0_ = 0;
  int r_ = 0;
  Time t_start_ = 0;
};

}  // namespace topkmon
