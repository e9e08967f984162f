#pragma once

#include <cstdint>
#include <vector>

#include "topkmon/trace.hpp"

namespace topkmon {

/// Message counters. Broadcasts cost 1 regardless of the number of
/// receivers; rounds are listed for diagnostics but carry no cost.
struct CostTotals {
  std::int64_t uplink = 0;
  std::int64_t downlink_unicast = 0;
  std::int64_t broadcast = 0;
  std::int64_t rounds = 0;

  std::int64_t messages() const { return uplink + downlink_unicast + broadcast; }

  CostTotals& operator+=(const CostTotals& o) {
    uplink += o.uplink;
    downlink_unicast += o.downlink_unicast;
    broadcast += o.broadcast;
    rounds += o.rounds;
    return *this;
  }

  friend CostTotals operator-(CostTotals a, const CostTotals& b) {
    a.uplink -= b.uplink;
    a.downlink_unicast -= b.downlink_unicast;
    a.broadcast -= b.broadcast;
    a.rounds -= b.rounds;
    return a;
  }
};

class CostLedger {
public:
  void begin_step(Time t) {
    steps_.push_back({t, CostTotals{}});
  }

  void count_uplink(std::int64_t m = 1) { bump().uplink += m; }
  void count_unicast(std::int64_t m = 1) { bump().downlink_unicast += m; }
  void count_broadcast(std::int64_t m = 1) { bump().broadcast += m; }
  void count_rounds(std::int64_t r) { bump().rounds += r; }

  CostTotals totals() const {
    CostTotals sum;
    for (const auto& [t, c] : steps_) sum += c;
    return sum;
  }

  const std::vector<std::pair<Time, CostTotals>>& per_step() const { return steps_; }

  const CostTotals& current_step() const {
    if (steps_.empty()) throw std::logic_error("CostLedger: no step open");
    return steps_.back().second;
  }

private:
  CostTotals& bump() {
    if (steps_.empty()) steps_.push_back({0, CostTotals{}});  // costs before step 1
    return steps_.back().second;
  }

  std::vector<std::pair<Time, CostTotals>> steps_;
};

}  // namespace topkmon
