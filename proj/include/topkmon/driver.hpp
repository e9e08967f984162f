#pragma once

#include <deque>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"
#include "topkmon/protocols/protocol.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// Thrown when a monitor's resting state fails the validity layer. The
/// message carries the recent stream rows, the filter table and the output
/// so the failure can be replayed from the text alone.
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Feeds a stream to a monitor one step at a time and, after every step,
/// checks the two resting-state invariants every protocol here shares:
/// the output set is eps-valid for the current row, and the filter
/// assignment both covers the row and certifies that output.
class SimDriver {
 public:
  explicit SimDriver(Monitor& monitor, bool check = true)
      : monitor_(monitor), check_(check) {}

  void step(Time t, const std::vector<Value>& values) {
    remember(t, values);
    monitor_.step(t, values);
    if (check_) verify(t, values);
  }

  /// Run a whole pre-built trace, opening one ledger step per row.
  void run(const Trace& trace, CostLedger& ledger) {
    for (Time t = 1; t <= trace.horizon(); ++t) {
      ledger.begin_step(t);
      step(t, trace.row(t));
    }
    monitor_.finish(trace.horizon());
  }

 private:
  void verify(Time t, const std::vector<Value>& values) const {
    std::vector<NodeId> out = monitor_.output();
    bool output_ok = is_valid_output(values, monitor_.k(), monitor_.eps(), out);
    bool filters_ok =
        output_ok && is_valid_filter_set(monitor_.filters(), values, out, monitor_.eps());
    if (output_ok && filters_ok) return;
    throw CheckFailure(dump(t, values, out, output_ok ? "filter set" : "output"));
  }

  void remember(Time t, const std::vector<Value>& values) {
    recent_.emplace_back(t, values);
    if (recent_.size() > kKeep) recent_.pop_front();
  }

  std::string dump(Time t, const std::vector<Value>& values, const std::vector<NodeId>& out,
                   const char* which) const {
    std::ostringstream os;
    os << "invalid " << which << " at t=" << t << " (" << monitor_.phase_tag() << ")\n";
    os << "output:";
    for (NodeId id : out) os << ' ' << id;
    os << "\nfilters:\n";
    const auto& fs = monitor_.filters();
    for (std::size_t i = 0; i < fs.size(); ++i) {
      os << "  node " << (i + 1) << " v=" << values[i] << " in [" << fs[i].lo.str() << ", "
         << (fs[i].hi ? fs[i].hi->str() : std::string("inf")) << "]\n";
    }
    os << "last rows:\n";
    for (const auto& [rt, row] : recent_) {
      os << "  t=" << rt << ':';
      for (Value v : row) os << ' ' << v;
      os << '\n';
    }
    return os.str();
  }

  static constexpr std::size_t kKeep = 10;

  Monitor& monitor_;
  bool check_;
  std::deque<std::pair<Time, std::vector<Value>>> recent_;
};

}  // namespace topkmon
