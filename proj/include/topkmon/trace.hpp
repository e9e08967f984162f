#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace topkmon {

using Value = std::uint64_t;
using NodeId = int;   // 1-based
using Time = std::int64_t;  // 1-based step index

/// Realized stream history: one row of n values per time step.
/// Rows are appended as the simulation advances, so a protocol can never
/// peek past the last appended step.
class Trace {
public:
  explicit Trace(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("Trace: need at least one node");
  }

  int n_nodes() const { return n_; }
  Time horizon() const { return static_cast<Time>(rows_.size()); }

  void append(std::vector<Value> row) {
    if (static_cast<int>(row.size()) != n_)
      throw std::invalid_argument("Trace: row width mismatch");
    rows_.push_back(std::move(row));
  }

  Value value(Time t, NodeId id) const {
    check(t, id);
    return rows_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(id - 1)];
  }

  const std::vector<Value>& row(Time t) const {
    check(t, 1);
    return rows_[static_cast<std::size_t>(t - 1)];
  }

  /// Min value of node id over steps [t1, t2], both inclusive.
  Value window_min(NodeId id, Time t1, Time t2) const {
    check(t1, id);
    check(t2, id);
    if (t1 > t2) throw std::invalid_argument("Trace: empty window");
    Value m = value(t1, id);
    for (Time t = t1 + 1; t <= t2; ++t) m = std::min(m, value(t, id));
    return m;
  }

  Value window_max(NodeId id, Time t1, Time t2) const {
    check(t1, id);
    check(t2, id);
    if (t1 > t2) throw std::invalid_argument("Trace: empty window");
    Value m = value(t1, id);
    for (Time t = t1 + 1; t <= t2; ++t) m = std::max(m, value(t, id));
    return m;
  }

private:
  void check(Time t, NodeId id) const {
    if (t < 1 || t > horizon()) throw std::out_of_range("Trace: step out of range");
    if (id < 1 || id > n_) throw std::out_of_range("Trace: node id out of range");
  }

  int n_;
  std::vector<std::vector<Value>> rows_;
};

/// Copy of the steps [t1, t2], renumbered to start at step 1. Lets a
/// window of a long run be replayed or handed to an oracle on its own.
inline Trace slice(const Trace& trace, Time t1, Time t2) {
  if (t1 > t2) throw std::invalid_argument("slice: empty window");
  Trace out(trace.n_nodes());
  for (Time t = t1; t <= t2; ++t) out.append(trace.row(t));
  return out;
}

}  // namespace topkmon
