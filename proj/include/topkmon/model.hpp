#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "topkmon/rational.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// Which side a node crossed its filter from. A node whose value rose above
/// the filter's top crossed it coming from below; a node whose value fell
/// under the bottom crossed it coming from above.
enum class ViolationSide { from_below, from_above };

inline const char* to_string(ViolationSide s) {
  return s == ViolationSide::from_below ? "from_below" : "from_above";
}

/// Closed interval constraint on one node's value. The top may be absent,
/// meaning the node is allowed to grow without bound.
struct Filter {
  Rat lo{0};
  std::optional<Rat> hi{};  // nullopt = unbounded above

  static Filter everything() { return Filter{Rat(0), std::nullopt}; }
  static Filter at_least(Rat lo) { return Filter{std::move(lo), std::nullopt}; }
  static Filter at_most(Rat hi) { return Filter{Rat(0), std::move(hi)}; }
  static Filter between(Rat lo, Rat hi) { return Filter{std::move(lo), std::move(hi)}; }

  bool bounded() const { return hi.has_value(); }

  bool contains(Value v) const {
    Rat rv = Rat::of_value(v);
    if (rv < lo) return false;
    if (hi && rv > *hi) return false;
    return true;
  }

  /// Side of the crossing, or nullopt when v sits inside the filter.
  std::optional<ViolationSide> crossing(Value v) const {
    Rat rv = Rat::of_value(v);
    if (hi && rv > *hi) return ViolationSide::from_below;
    if (rv < lo) return ViolationSide::from_above;
    return std::nullopt;
  }

  friend bool operator==(const Filter& a, const Filter& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

struct Violation {
  NodeId id;
  ViolationSide side;
  Value value;
};

/// All nodes currently outside their filters, ascending id.
inline std::vector<Violation> detect_violations(const std::vector<Filter>& filters,
                                                const std::vector<Value>& values) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (auto side = filters[i].crossing(values[i]))
      out.push_back({static_cast<NodeId>(i + 1), *side, values[i]});
  }
  return out;
}

/// Rank order: higher value first, ties broken toward the smaller id.
inline bool outranks(Value va, NodeId ia, Value vb, NodeId ib) {
  return va > vb || (va == vb && ia < ib);
}

/// Ids of the k top-ranked nodes, in rank order.
inline std::vector<NodeId> exact_top_k(const std::vector<Value>& values, int k) {
  std::vector<NodeId> ids(values.size());
  std::iota(ids.begin(), ids.end(), 1);
  std::sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) {
    return outranks(values[a - 1], a, values[b - 1], b);
  });
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

/// Value held by the node at rank k (1-based rank).
inline Value kth_value(const std::vector<Value>& values, int k) {
  std::vector<Value> sorted(values);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return sorted[static_cast<std::size_t>(k - 1)];
}

/// Band of values that are ambiguous relative to rank k under slack eps:
/// [(1-eps) * v_k, v_k / (1-eps)], both ends closed. Values strictly above
/// the top of the band belong to every admissible output; values strictly
/// below the bottom belong to none.
struct Neighborhood {
  Value kth_value = 0;         // the rank-k value itself
  Rat a_lo;                    // (1-eps) * v_k, bottom of the band
  Rat a_hi;                    // v_k / (1-eps), top of the band
  Rat e_lo;                    // == a_hi; strictly above lies forced territory
  std::vector<NodeId> k_set;   // nodes inside the closed band, ascending id
  int sigma_t = 0;             // |k_set|
};

inline Neighborhood eps_neighborhood(const std::vector<Value>& values, int k, const Rat& eps) {
  Neighborhood nb;
  nb.kth_value = kth_value(values, k);
  Rat vk = Rat::of_value(nb.kth_value);
  Rat keep = Rat(1) - eps;
  nb.a_lo = keep * vk;
  nb.a_hi = vk / keep;
  nb.e_lo = nb.a_hi;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (nb.a_lo <= values[i] && values[i] <= nb.a_hi)
      nb.k_set.push_back(static_cast<NodeId>(i + 1));
  nb.sigma_t = static_cast<int>(nb.k_set.size());
  return nb;
}

/// Nodes whose value falls inside the ambiguous band (closed).
inline std::vector<NodeId> band_nodes(const std::vector<Value>& values, int k, const Rat& eps) {
  return eps_neighborhood(values, k, eps).k_set;
}

/// Nodes that every admissible output must include: value > v_k / (1-eps).
inline std::vector<NodeId> mandatory_nodes(const std::vector<Value>& values, int k,
                                           const Rat& eps) {
  auto nb = eps_neighborhood(values, k, eps);
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > nb.e_lo) out.push_back(static_cast<NodeId>(i + 1));
  return out;
}

/// Instantaneous difficulty: how many nodes sit in the ambiguous band.
inline int sigma_at(const std::vector<Value>& values, int k, const Rat& eps) {
  return eps_neighborhood(values, k, eps).sigma_t;
}

/// A k-member output split into the part forced in from strictly above the
/// band and the part drawn from inside it.
struct OutputSet {
  std::vector<NodeId> members;  // as given by the caller
  std::vector<NodeId> part_E;   // members with value strictly above the band
  std::vector<NodeId> part_A;   // the remaining members
};

inline OutputSet classify_output(const std::vector<Value>& values, int k, const Rat& eps,
                                 const std::vector<NodeId>& output) {
  OutputSet split;
  split.members = output;
  auto nb = eps_neighborhood(values, k, eps);
  for (NodeId id : output) {
    if (values[static_cast<std::size_t>(id - 1)] > nb.e_lo)
      split.part_E.push_back(id);
    else
      split.part_A.push_back(id);
  }
  return split;
}

/// An output passes when it has exactly k members, includes every node the
/// band forces in, and draws the rest from inside the band.
inline bool is_valid_output(const std::vector<Value>& values, int k, const Rat& eps,
                            const std::vector<NodeId>& output) {
  if (static_cast<int>(output.size()) != k) return false;
  std::set<NodeId> members(output.begin(), output.end());
  if (static_cast<int>(members.size()) != k) return false;
  auto nb = eps_neighborhood(values, k, eps);
  for (std::size_t i = 0; i < values.size(); ++i) {
    NodeId id = static_cast<NodeId>(i + 1);
    if (members.count(id)) {
      if (values[i] < nb.a_lo) return false;  // member below the band
    } else {
      if (values[i] > nb.e_lo) return false;  // forced node left out
    }
  }
  return true;
}

/// Rest-state condition on a filter assignment: every value sits inside its
/// filter, and every member's bottom dominates (1-eps) times every
/// non-member's top. A non-member with an unbounded filter sinks the whole
/// assignment (unless there are no members to compare against).
inline bool is_valid_filter_set(const std::vector<Filter>& filters,
                                const std::vector<Value>& values,
                                const std::vector<NodeId>& output, const Rat& eps) {
  std::set<NodeId> members(output.begin(), output.end());
  Rat min_member_lo(0);
  bool have_member = false;
  Rat max_outside_hi(0);
  bool have_outside = false;
  bool unbounded_outside = false;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (!filters[i].contains(values[i])) return false;
    NodeId id = static_cast<NodeId>(i + 1);
    if (members.count(id)) {
      if (!have_member || filters[i].lo < min_member_lo) min_member_lo = filters[i].lo;
      have_member = true;
    } else if (!filters[i].bounded()) {
      unbounded_outside = true;
    } else {
      if (!have_outside || *filters[i].hi > max_outside_hi) max_outside_hi = *filters[i].hi;
      have_outside = true;
    }
  }
  if (!have_member) return true;  // no cross pair to check
  if (unbounded_outside) return false;
  if (!have_outside) return true;
  return min_member_lo >= (Rat(1) - eps) * max_outside_hi;
}

/// Smallest and largest value any node of S observes in the window [t, t2].
inline std::pair<Value, Value> window_min_max(const Trace& trace,
                                              const std::vector<NodeId>& ids, Time t,
                                              Time t2) {
  if (ids.empty()) throw std::invalid_argument("window_min_max: empty node set");
  Value lo = trace.window_min(ids.front(), t, t2);
  Value hi = trace.window_max(ids.front(), t, t2);
  for (std::size_t j = 1; j < ids.size(); ++j) {
    lo = std::min(lo, trace.window_min(ids[j], t, t2));
    hi = std::max(hi, trace.window_max(ids[j], t, t2));
  }
  return {lo, hi};
}

}  // namespace topkmon
