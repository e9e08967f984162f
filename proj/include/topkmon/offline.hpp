#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "topkmon/model.hpp"
#include "topkmon/rational.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// Witness that one output set covers a whole window with fixed filters:
/// members never leave inside, outsiders never leave outside, and the two
/// bounds clear the slack condition. Whoever holds a witness holds a proof
/// that an offline player pays nothing inside the window.
struct SegmentWitness {
  std::vector<NodeId> output;  // ascending ids
  Filter inside;
  Filter outside;
};

/// One phase of an offline plan: from t_from through t_to the output and
/// both filters stay fixed.
struct OptSegment {
  Time t_from = 0;
  Time t_to = 0;
  std::vector<NodeId> output;
  Filter inside;
  Filter outside;
};

/// Offline plan for a full trace. reconfig_events counts filter updates
/// with the initial setup included; detailed_cost prices each update as
/// one broadcast plus a unicast to every node on the smaller side of the
/// split, the cheapest way to move both shared filters.
struct OptSchedule {
  std::vector<OptSegment> segments;
  int reconfig_events = 0;
  std::int64_t detailed_cost = 0;

  /// Updates an offline player is forced into strictly inside the trace,
  /// i.e. not counting the setup it may carry in from before.
  int forced_updates() const {
    return segments.empty() ? 0 : static_cast<int>(segments.size()) - 1;
  }
};

/// Fixed filters survive [t, t2] for an output S exactly when the lowest
/// value any member takes stays within slack of the highest value any
/// outsider takes. Picking S by best window minima alone is not enough: a
/// node with a weak floor but a tall spike may need to sit inside S just
/// so its spike stops counting toward the outsiders' ceiling. So every
/// distinct window maximum b gets a turn as the candidate ceiling: nodes
/// above b are forced in, the rest of S is filled with the best floors,
/// and the first candidate that clears the slack wins. Any feasible set
/// leaves its own ceiling among the candidates, so a miss here is a real
/// miss. Quadratic in n at worst.
inline std::optional<SegmentWitness> feasible_segment(const Trace& trace, int k,
                                                      const Rat& eps, Time t, Time t2) {
  const int n = trace.n_nodes();
  if (k < 1 || k >= n) throw std::invalid_argument("feasible_segment: need 1 <= k < n");
  if (t > t2) throw std::invalid_argument("feasible_segment: empty window");

  std::vector<Value> wmin(static_cast<std::size_t>(n));
  std::vector<Value> wmax(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    wmin[static_cast<std::size_t>(i)] = trace.window_min(i + 1, t, t2);
    wmax[static_cast<std::size_t>(i)] = trace.window_max(i + 1, t, t2);
  }

  std::vector<int> by_floor(static_cast<std::size_t>(n));
  std::iota(by_floor.begin(), by_floor.end(), 0);
  std::sort(by_floor.begin(), by_floor.end(), [&](int a, int b) {
    auto fa = wmin[static_cast<std::size_t>(a)];
    auto fb = wmin[static_cast<std::size_t>(b)];
    return fa != fb ? fa > fb : a < b;
  });

  std::vector<Value> ceilings(wmax);
  std::sort(ceilings.begin(), ceilings.end());
  ceilings.erase(std::unique(ceilings.begin(), ceilings.end()), ceilings.end());

  const Rat keep = Rat(1) - eps;
  std::vector<char> member(static_cast<std::size_t>(n));
  for (Value b : ceilings) {
    std::fill(member.begin(), member.end(), 0);
    int picked = 0;
    for (int i = 0; i < n; ++i)
      if (wmax[static_cast<std::size_t>(i)] > b) {
        member[static_cast<std::size_t>(i)] = 1;
        ++picked;
      }
    if (picked > k) continue;
    for (int i : by_floor) {
      if (picked == k) break;
      if (!member[static_cast<std::size_t>(i)]) {
        member[static_cast<std::size_t>(i)] = 1;
        ++picked;
      }
    }

    bool first_in = true, first_out = true;
    Value floor_in = 0, ceil_out = 0;
    for (int i = 0; i < n; ++i) {
      std::size_t u = static_cast<std::size_t>(i);
      if (member[u]) {
        if (first_in || wmin[u] < floor_in) floor_in = wmin[u];
        first_in = false;
      } else {
        if (first_out || wmax[u] > ceil_out) ceil_out = wmax[u];
        first_out = false;
      }
    }
    if (Rat::of_value(floor_in) < keep * Rat::of_value(ceil_out)) continue;

    SegmentWitness w;
    for (int i = 0; i < n; ++i)
      if (member[static_cast<std::size_t>(i)]) w.output.push_back(i + 1);
    w.inside = Filter::at_least(Rat::of_value(floor_in));
    w.outside = Filter::at_most(Rat::of_value(ceil_out));
    return w;
  }
  return std::nullopt;
}

/// Zero-slack variant with ties ordered by id: the member floor has to
/// outrank the outsider ceiling as (value, id) pairs. Any set that works
/// is the tie-broken top-k at every covered step, so the top-k of the
/// first step is the only candidate worth testing.
inline std::optional<SegmentWitness> feasible_segment_exact(const Trace& trace, int k,
                                                            Time t, Time t2) {
  const int n = trace.n_nodes();
  if (k < 1 || k >= n) throw std::invalid_argument("feasible_segment_exact: need 1 <= k < n");
  if (t > t2) throw std::invalid_argument("feasible_segment_exact: empty window");

  std::vector<NodeId> top = exact_top_k(trace.row(t), k);
  std::vector<char> member(static_cast<std::size_t>(n) + 1, 0);
  for (NodeId id : top) member[static_cast<std::size_t>(id)] = 1;

  Value floor_v = 0, ceil_v = 0;
  NodeId floor_id = 0, ceil_id = 0;
  for (NodeId id = 1; id <= n; ++id) {
    if (member[static_cast<std::size_t>(id)]) {
      Value m = trace.window_min(id, t, t2);
      if (floor_id == 0 || outranks(floor_v, floor_id, m, id)) {
        floor_v = m;
        floor_id = id;
      }
    } else {
      Value m = trace.window_max(id, t, t2);
      if (ceil_id == 0 || outranks(m, id, ceil_v, ceil_id)) {
        ceil_v = m;
        ceil_id = id;
      }
    }
  }
  if (!outranks(floor_v, floor_id, ceil_v, ceil_id)) return std::nullopt;

  SegmentWitness w;
  w.output = std::move(top);
  std::sort(w.output.begin(), w.output.end());
  w.inside = Filter::at_least(Rat::of_value(floor_v));
  w.outside = Filter::at_most(Rat::of_value(ceil_v));
  return w;
}

namespace detail {

/// Greedy segmentation: stretch each segment as far as it goes, then cut.
/// Feasibility only ever shrinks when a window grows, so the longest
/// feasible extent is found by binary search, and because any feasible
/// cover could be reshaped segment by segment into this one without
/// adding cuts, the greedy count is minimal.
template <typename Feasible>
OptSchedule plan_greedy(const Trace& trace, int k, Feasible&& feasible) {
  const int n = trace.n_nodes();
  if (k < 1 || k >= n) throw std::invalid_argument("plan_greedy: need 1 <= k < n");

  OptSchedule plan;
  const Time horizon = trace.horizon();
  Time t = 1;
  while (t <= horizon) {
    if (!feasible(t, t))
      throw std::logic_error("plan_greedy: single-step window refused");  // cannot happen
    Time lo = t, hi = horizon;
    while (lo < hi) {
      Time mid = lo + (hi - lo + 1) / 2;
      if (feasible(t, mid))
        lo = mid;
      else
        hi = mid - 1;
    }
    auto w = feasible(t, lo);
    plan.segments.push_back({t, lo, std::move(w->output), w->inside, w->outside});
    t = lo + 1;
  }
  plan.reconfig_events = static_cast<int>(plan.segments.size());
  plan.detailed_cost =
      static_cast<std::int64_t>(plan.segments.size()) * (std::min(k, n - k) + 1);
  return plan;
}

}  // namespace detail

inline OptSchedule opt_greedy(const Trace& trace, int k, const Rat& eps) {
  return detail::plan_greedy(
      trace, k, [&](Time a, Time b) { return feasible_segment(trace, k, eps, a, b); });
}

inline OptSchedule opt_exact(const Trace& trace, int k) {
  return detail::plan_greedy(
      trace, k, [&](Time a, Time b) { return feasible_segment_exact(trace, k, a, b); });
}

/// Exhaustive planner for desk-size instances: a dynamic program over all
/// window splits with feasibility decided by trying every k-subset.
/// Deliberately shares no machinery with feasible_segment or the greedy
/// cut rule, so the two planners can referee each other.
inline OptSchedule opt_brute(const Trace& trace, int k, const Rat& eps) {
  const int n = trace.n_nodes();
  const Time horizon = trace.horizon();
  if (k < 1 || k >= n) throw std::invalid_argument("opt_brute: need 1 <= k < n");
  if (n > 6 || horizon > 12) throw std::invalid_argument("opt_brute: instance too large");

  const Rat keep = Rat(1) - eps;
  auto try_window = [&](Time a, Time b) -> std::optional<SegmentWitness> {
    std::vector<char> mask(static_cast<std::size_t>(n), 0);
    std::fill(mask.begin(), mask.begin() + k, 1);
    do {
      bool first_in = true, first_out = true;
      Value floor_in = 0, ceil_out = 0;
      for (int i = 0; i < n; ++i) {
        if (mask[static_cast<std::size_t>(i)]) {
          Value m = trace.window_min(i + 1, a, b);
          if (first_in || m < floor_in) floor_in = m;
          first_in = false;
        } else {
          Value m = trace.window_max(i + 1, a, b);
          if (first_out || m > ceil_out) ceil_out = m;
          first_out = false;
        }
      }
      if (Rat::of_value(floor_in) >= keep * Rat::of_value(ceil_out)) {
        SegmentWitness w;
        for (int i = 0; i < n; ++i)
          if (mask[static_cast<std::size_t>(i)]) w.output.push_back(i + 1);
        w.inside = Filter::at_least(Rat::of_value(floor_in));
        w.outside = Filter::at_most(Rat::of_value(ceil_out));
        return w;
      }
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return std::nullopt;
  };

  // best[a] = fewest segments covering [a, horizon], cut[a] = where the
  // first of them ends.
  const int unreachable = std::numeric_limits<int>::max();
  std::vector<int> best(static_cast<std::size_t>(horizon) + 2, unreachable);
  std::vector<Time> cut(static_cast<std::size_t>(horizon) + 2, 0);
  best[static_cast<std::size_t>(horizon) + 1] = 0;
  for (Time a = horizon; a >= 1; --a) {
    for (Time b = a; b <= horizon; ++b) {
      if (!try_window(a, b)) continue;
      int rest = best[static_cast<std::size_t>(b) + 1];
      if (rest != unreachable && rest + 1 < best[static_cast<std::size_t>(a)]) {
        best[static_cast<std::size_t>(a)] = rest + 1;
        cut[static_cast<std::size_t>(a)] = b;
      }
    }
  }

  OptSchedule plan;
  Time t = 1;
  while (t <= horizon) {
    Time b = cut[static_cast<std::size_t>(t)];
    auto w = try_window(t, b);
    plan.segments.push_back({t, b, std::move(w->output), w->inside, w->outside});
    t = b + 1;
  }
  plan.reconfig_events = static_cast<int>(plan.segments.size());
  plan.detailed_cost =
      static_cast<std::int64_t>(plan.segments.size()) * (std::min(k, n - k) + 1);
  return plan;
}

}  // namespace topkmon
