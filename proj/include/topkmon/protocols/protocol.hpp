#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"

namespace topkmon {

/// Why a protocol epoch ended.
enum class StopReason {
  interval_empty,          // guess interval ran dry, output set must change
  handoff_to_scattered,    // band split into k high and n-k low nodes
  handoff_to_dense,        // reserved for symmetric dispatch
  band_starved,            // band ran out of members without enough counter-
                           // evidence to blame anyone but the anchor choice
  trace_exhausted,         // stream ended while the epoch was still open
};

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::interval_empty: return "interval_empty";
    case StopReason::handoff_to_scattered: return "handoff_to_scattered";
    case StopReason::handoff_to_dense: return "handoff_to_dense";
    case StopReason::band_starved: return "band_starved";
    case StopReason::trace_exhausted: return "trace_exhausted";
  }
  return "?";
}

enum class EpochKind { midpoint, scattered, dense, half_eps };

inline std::string to_string(EpochKind k) {
  switch (k) {
    case EpochKind::midpoint: return "midpoint";
    case EpochKind::scattered: return "scattered";
    case EpochKind::dense: return "dense";
    case EpochKind::half_eps: return "half_eps";
  }
  return "?";
}

/// How a correction sub-run returned control to the enclosing dense run.
enum class SubOutcomeKind {
  move_to_v1,
  move_to_v3,
  halve_lower,
  halve_upper,
  handoff_to_scattered,
};

inline std::string to_string(SubOutcomeKind k) {
  switch (k) {
    case SubOutcomeKind::move_to_v1: return "move_to_v1";
    case SubOutcomeKind::move_to_v3: return "move_to_v3";
    case SubOutcomeKind::halve_lower: return "halve_lower";
    case SubOutcomeKind::halve_upper: return "halve_upper";
    case SubOutcomeKind::handoff_to_scattered: return "handoff_to_scattered";
  }
  return "?";
}

/// Counters a dense run keeps about itself, mostly so tests can assert the
/// narrowing really halves and sub-runs stay within budget.
struct DenseStats {
  Value z = 0;
  std::int64_t l0_count = 0;
  int rounds = 0;      // halvings of the main interval
  int sub_calls = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> halve_sizes;      // (before, after)
  std::vector<std::pair<std::int64_t, std::int64_t>> sub_halve_sizes;  // same, for L'
  std::vector<SubOutcomeKind> sub_outcomes;
};

/// One contiguous stretch during which a single protocol owned the filters.
/// Costs are ledger snapshots; the epoch's own cost is end minus start.
struct EpochRecord {
  EpochKind kind = EpochKind::midpoint;
  Time t_start = 0;
  Time t_end = 0;  // last step the epoch was live on
  StopReason reason = StopReason::trace_exhausted;
  CostTotals cost_start;
  CostTotals cost_end;
  std::optional<DenseStats> dense;

  CostTotals cost() const { return cost_end - cost_start; }
};

/// What a finished protocol run reports back.
struct ProtocolOutcome {
  Time end_time = 0;
  StopReason reason = StopReason::trace_exhausted;
  CostTotals cost;
};

/// A server-side monitoring strategy. The driver feeds it one step at a
/// time; between steps the filter assignment and output set must satisfy
/// the validity checks in model.hpp.
class Monitor {
 public:
  virtual ~Monitor() = default;

  /// Process all violations of step t. `values` is the full current row;
  /// implementations may only "see" it through the communication helpers.
  virtual void step(Time t, const std::vector<Value>& values) = 0;

  /// Close the open epoch once the stream has ended.
  virtual void finish(Time t) = 0;

  virtual const std::vector<Filter>& filters() const = 0;
  virtual std::vector<NodeId> output() const = 0;

  /// Short label of the currently active mode, for logs and event dumps.
  virtual std::string phase_tag() const = 0;

  virtual int n() const = 0;
  virtual int k() const = 0;
  /// Slack the validity layer should check this monitor against.
  virtual Rat eps() const = 0;

  virtual const std::vector<EpochRecord>& epochs() const = 0;
};

}  // namespace topkmon
