#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topkmon/trace.hpp"

namespace topkmon {

/// One observable protocol action, kept for debugging and for the event-log
/// output format. `node` is 0 when the action has no single subject.
struct Event {
  Time t = 0;
  std::string kind;    // violation, broadcast, halve, move, dispatch, ...
  NodeId node = 0;
  std::string detail;  // short free text, e.g. the new interval
};

/// Append-only event collector shared by a protocol run and its driver.
/// Protocols write through a pointer that may be null, so logging stays
/// optional and zero-cost when off.
using EventLog = std::vector<Event>;

inline void emit(EventLog* log, Time t, std::string kind, NodeId node = 0,
                 std::string detail = {}) {
  if (log == nullptr) return;
  log->push_back(Event{t, std::move(kind), node, std::move(detail)});
}

}  // namespace topkmon
