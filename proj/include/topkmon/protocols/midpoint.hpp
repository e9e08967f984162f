#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "topkmon/comms.hpp"
#include "topkmon/embedding.hpp"
#include "topkmon/protocols/events.hpp"
#include "topkmon/protocols/interval.hpp"
#include "topkmon/protocols/protocol.hpp"

namespace topkmon {

/// Exact top-k tracking (no slack) by bisecting in code space. The guess
/// interval brackets a single separating code m; publishing it back in
/// value space needs per-node rounding, since code m divided by n+1 lands
/// between integers differently for every id:
///   member i   keeps  v >= ceil((m - n + i) / (n + 1))
///   outsider j keeps  v <= floor((m - n + j) / (n + 1))
/// Rounded this way the member floors never drop below the outsider caps,
/// and a node crosses its published bound exactly when its code crosses m.
class MidpointMonitor : public Monitor {
 public:
  MidpointMonitor(int n, int k, Rng& rng, CostLedger& ledger, EventLog* log = nullptr)
      : emb_(n), k_(k), rng_(rng), ledger_(ledger), log_(log),
        filters_(static_cast<std::size_t>(n)), is_member_(static_cast<std::size_t>(n), 0) {
    if (k < 1 || k >= n) throw std::invalid_argument("MidpointMonitor: need 1 <= k < n");
  }

  void step(Time t, const std::vector<Value>& values) override {
    if (!started_) {
      probe(t, values);
      started_ = true;
    }
    int guard = 0;
    for (;;) {
      ViolationReport rep = report_violations(filters_, values, rng_, ledger_);
      if (!rep.any()) break;
      if (++guard > 8 * 64) throw std::logic_error("MidpointMonitor: loop did not settle");
      const Violation& v = rep.first();
      emit(log_, t, "violation", v.id,
           std::string(to_string(v.side)) + " v=" + std::to_string(v.value));
      std::int64_t code = emb_.code(v.value, v.id);
      l_ = generic_round(l_, Violation{v.id, v.side, static_cast<Value>(code)});
      if (l_.empty()) {
        close_epoch(t, StopReason::interval_empty);
        probe(t, values);
      } else {
        m_ = l_.midpoint();
        publish(t);
      }
    }
  }

  void finish(Time t) override {
    if (epoch_open_) close_epoch(t, StopReason::trace_exhausted);
  }

  const std::vector<Filter>& filters() const override { return filters_; }
  std::vector<NodeId> output() const override { return members_; }
  std::string phase_tag() const override { return "midpoint"; }
  int n() const override { return emb_.n(); }
  int k() const override { return k_; }
  Rat eps() const override { return Rat(0); }
  const std::vector<EpochRecord>& epochs() const override { return epochs_; }

  const GuessInterval& interval() const { return l_; }
  std::int64_t boundary() const { return m_; }

 private:
  void probe(Time t, const std::vector<Value>& values) {
    open_epoch(t);  // before the ranking, so the probe bills to the new epoch
    auto ranked = top_k_plus_one(values, k_, rng_, ledger_);
    members_.clear();
    std::fill(is_member_.begin(), is_member_.end(), 0);
    for (int j = 0; j < k_; ++j) {
      members_.push_back(ranked[static_cast<std::size_t>(j)].first);
      is_member_[static_cast<std::size_t>(ranked[static_cast<std::size_t>(j)].first - 1)] = 1;
    }
    std::sort(members_.begin(), members_.end());
    const auto& kth = ranked[static_cast<std::size_t>(k_ - 1)];
    const auto& next = ranked[static_cast<std::size_t>(k_)];
    l_ = GuessInterval::of(emb_.code(next.second, next.first), emb_.code(kth.second, kth.first));
    m_ = l_.midpoint();
    publish(t);
  }

  void publish(Time t) {
    int n = emb_.n();
    for (int i = 1; i <= n; ++i) {
      std::int64_t num = m_ - n + i;
      std::int64_t den = n + 1;
      Filter& f = filters_[static_cast<std::size_t>(i - 1)];
      if (is_member_[static_cast<std::size_t>(i - 1)]) {
        // ceil(num/den); num > -den here, so the negative branch never digs below 0
        std::int64_t q = num >= 0 ? (num + den - 1) / den : 0;
        f = Filter::at_least(Rat(q));
      } else {
        std::int64_t q = num >= 0 ? num / den : -((-num + den - 1) / den);
        f = Filter::at_most(Rat(q));
      }
    }
    ledger_.count_broadcast();
    emit(log_, t, "broadcast", 0, "midpoint L=" + l_.str() + " m=" + std::to_string(m_));
  }

  void open_epoch(Time t) {
    EpochRecord rec;
    rec.kind = EpochKind::midpoint;
    rec.t_start = t;
    rec.cost_start = ledger_.totals();
    epochs_.push_back(std::move(rec));
    epoch_open_ = true;
  }

  void close_epoch(Time t, StopReason reason) {
    EpochRecord& rec = epochs_.back();
    rec.t_end = t;
    rec.reason = reason;
    rec.cost_end = ledger_.totals();
    epoch_open_ = false;
    emit(log_, t, "dispatch", 0, "midpoint epoch closed: " + to_string(reason));
  }

  Embedding emb_;
  int k_;
  Rng& rng_;
  CostLedger& ledger_;
  EventLog* log_;

  std::vector<Filter> filters_;
  std::vector<char> is_member_;
  std::vector<NodeId> members_;
  std::vector<EpochRecord> epochs_;
  GuessInterval l_;
  std::int64_t m_ = 0;
  bool started_ = false;
  bool epoch_open_ = false;
};

}  // namespace topkmon
