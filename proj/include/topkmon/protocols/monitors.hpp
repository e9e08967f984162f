#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "topkmon/comms.hpp"
#include "topkmon/protocols/dense.hpp"
#include "topkmon/protocols/events.hpp"
#include "topkmon/protocols/protocol.hpp"
#include "topkmon/protocols/scattered.hpp"

namespace topkmon {

/// Top-level eps-slack monitor: probes the k+1 leaders, picks the regime by
/// the gap test v_{k+1} < (1-eps) v_k, and re-dispatches whenever the active
/// run stops. A dense run that splits the band cleanly hands off to
/// scattered without a fresh probe.
class EpsTopkMonitor : public Monitor {
 public:
  EpsTopkMonitor(int n, int k, Rat eps, Rng& rng, CostLedger& ledger, EventLog* log = nullptr)
      : n_(n), k_(k), eps_(std::move(eps)), one_minus_eps_(Rat(1) - eps_),
        rng_(rng), ledger_(ledger), log_(log) {
    if (k < 1 || k >= n) throw std::invalid_argument("EpsTopkMonitor: need 1 <= k < n");
    if (!(eps_ > Rat(0)) || !(eps_ < Rat(1)))
      throw std::invalid_argument("EpsTopkMonitor: need 0 < eps < 1");
  }

  void step(Time t, const std::vector<Value>& values) override {
    if (!scat_ && !dense_) dispatch(t, values);
    int guard = 0;
    for (;;) {
      std::optional<StopReason> res =
          scat_ ? scat_->on_step(t, values) : dense_->on_step(t, values);
      if (!res) return;
      close_epoch(t, *res);
      if (++guard > 256) throw std::logic_error("EpsTopkMonitor: dispatch loop did not settle");
      if (*res == StopReason::handoff_to_scattered) {
        CostTotals at = ledger_.totals();
        dense_.reset();
        scat_.emplace(n_, k_, eps_, rng_, ledger_, log_);
        open_epoch(t, EpochKind::scattered, at);
        scat_->start(t, values);
      } else {
        dispatch(t, values);
      }
    }
  }

  void finish(Time t) override {
    if (epoch_open_) close_epoch(t, StopReason::trace_exhausted);
  }

  const std::vector<Filter>& filters() const override {
    if (scat_) return scat_->filters();
    if (dense_) return dense_->filters();
    throw std::logic_error("EpsTopkMonitor: no active run");
  }

  std::vector<NodeId> output() const override {
    if (scat_) return scat_->output();
    if (dense_) return dense_->output();
    throw std::logic_error("EpsTopkMonitor: no active run");
  }

  std::string phase_tag() const override {
    if (scat_) return std::string("scattered_") + to_string(scat_->phase());
    if (dense_) return dense_->stage_tag();
    return "idle";
  }

  int n() const override { return n_; }
  int k() const override { return k_; }
  Rat eps() const override { return eps_; }
  const std::vector<EpochRecord>& epochs() const override { return epochs_; }

  const ScatteredRun* scattered() const { return scat_ ? &*scat_ : nullptr; }
  const DenseRun* dense() const { return dense_ ? &*dense_ : nullptr; }

 private:
  void dispatch(Time t, const std::vector<Value>& values) {
    CostTotals at = ledger_.totals();  // the probe bills to the new epoch
    auto ranked = top_k_plus_one(values, k_, rng_, ledger_);
    Value vk = ranked[static_cast<std::size_t>(k_ - 1)].second;
    Value vk1 = ranked[static_cast<std::size_t>(k_)].second;
    bool gap = Rat::of_value(vk1) < one_minus_eps_ * Rat::of_value(vk);
    emit(log_, t, "dispatch", 0,
         std::string(gap ? "scattered" : "dense") + " vk=" + std::to_string(vk) +
             " vk1=" + std::to_string(vk1));
    if (gap) {
      dense_.reset();
      scat_.emplace(n_, k_, eps_, rng_, ledger_, log_);
      open_epoch(t, EpochKind::scattered, at);
      scat_->start_with_probe(t, ranked);
    } else {
      scat_.reset();
      dense_.emplace(n_, k_, eps_, rng_, ledger_, log_);
      open_epoch(t, EpochKind::dense, at);
      dense_->start(t, values, ranked);
    }
  }

  void open_epoch(Time t, EpochKind kind, const CostTotals& cost_start) {
    EpochRecord rec;
    rec.kind = kind;
    rec.t_start = t;
    rec.cost_start = cost_start;
    epochs_.push_back(std::move(rec));
    epoch_open_ = true;
  }

  void close_epoch(Time t, StopReason reason) {
    EpochRecord& rec = epochs_.back();
    rec.t_end = t;
    rec.reason = reason;
    rec.cost_end = ledger_.totals();
    if (dense_) rec.dense = dense_->stats();
    epoch_open_ = false;
  }

  int n_;
  int k_;
  Rat eps_;
  Rat one_minus_eps_;
  Rng& rng_;
  CostLedger& ledger_;
  EventLog* log_;

  std::optional<ScatteredRun> scat_;
  std::optional<DenseRun> dense_;
  std::vector<EpochRecord> epochs_;
  bool epoch_open_ = false;
};

/// Validation-grade monitor for the halved-slack bound: it stays eps-valid
/// online, and it declares interval_empty only when the values it has seen
/// rule out any fixed filter assignment at the tighter slack eps/2 across
/// the whole epoch window. One band around the probed k-th value z, cut at
/// ell0 = (1-eps/2)z and stretched to u0 = ell0/(1-eps):
///   V1 = {v > u0},  V3 = {v < ell0},  V2 = the band between.
/// Nodes migrate between the three groups as violations report their exact
/// values, and two cumulative certificates build up against the anchor z:
///   - over: ids once seen above u0. With k+1 of them, any k-member set
///     leaves one outside whose filter ceiling must exceed u0, forcing every
///     member floor above (1-eps/2)u0 > z; at the probe step only k-1 values
///     sat strictly above z, so no single assignment covers the window.
///   - deep + risers: n-k+1 ids once below ell0 plant a dipper inside every
///     k-member set, and k+1 ids once at or above z leave a riser outside
///     it; floor(dipper) < (1-eps/2)z <= (1-eps/2)*ceiling(riser) breaks the
///     separation requirement.
/// When the band can no longer supply k members before either certificate
/// is complete, one broadcast asks the silent nodes whether they have
/// touched z this epoch; if no riser turns up the restart is booked as
/// band_starved, a turnover that claims nothing about the tighter slack.
/// A clean k / n-k split still hands off to a scattered interlude.
class HalfEpsMonitor : public Monitor {
 public:
  HalfEpsMonitor(int n, int k, Rat eps, Rng& rng, CostLedger& ledger, EventLog* log = nullptr)
      : n_(n), k_(k), eps_(std::move(eps)), one_minus_eps_(Rat(1) - eps_),
        rng_(rng), ledger_(ledger), log_(log), filters_(static_cast<std::size_t>(n)),
        wmax_(static_cast<std::size_t>(n), 0) {
    if (k < 1 || k >= n) throw std::invalid_argument("HalfEpsMonitor: need 1 <= k < n");
    if (!(eps_ > Rat(0)) || !(eps_ < Rat(1)))
      throw std::invalid_argument("HalfEpsMonitor: need 0 < eps < 1");
  }

  void step(Time t, const std::vector<Value>& values) override {
    if (!started_) {
      start_epoch(t, values);
      started_ = true;
    } else {
      for (std::size_t j = 0; j < values.size(); ++j)
        wmax_[j] = std::max(wmax_[j], values[j]);
    }
    int guard = 0;
    const int cap = 4 * n_ + 64;
    for (;;) {
      if (++guard > cap) throw std::logic_error("HalfEpsMonitor: loop did not settle");
      if (scat_) {
        auto res = scat_->on_step(t, values);
        if (!res) return;
        close_epoch(t, *res);
        start_epoch(t, values);
        continue;
      }
      ViolationReport rep = report_violations(filters_, values, rng_, ledger_);
      if (!rep.any()) return;
      const Violation& v = rep.first();
      emit(log_, t, "violation", v.id,
           std::string(to_string(v.side)) + " v=" + std::to_string(v.value));
      NodeId i = v.id;
      if (v.side == ViolationSide::from_below) {
        // only V2 and V3 filters have a ceiling, and both ceilings are u0
        over_.insert(i);
        risers_.insert(i);
        if (certified_stuck()) {
          close_epoch(t, StopReason::interval_empty);
          start_epoch(t, values);
          continue;
        }
        // the certificate is short of k+1 overs, so V1 stays below k here
        v2_.erase(i);
        v3_.erase(i);
        v1_.insert(i);
        filters_[static_cast<std::size_t>(i - 1)] = Filter::at_least(ell0_);
        ledger_.count_unicast();
        emit(log_, t, "move", i, "to V1");
      } else {
        // only V1 and V2 filters have a floor, and both floors are ell0
        deep_.insert(i);
        if (certified_stuck()) {
          close_epoch(t, StopReason::interval_empty);
          start_epoch(t, values);
          continue;
        }
        if (static_cast<int>(v1_.size() + v2_.size()) - 1 < k_) {
          // the band starves; deep_ already holds n-k+1 ids, so the anchor
          // turns over either with a full certificate or as a plain restart
          poll_risers(t);
          close_epoch(t, certified_stuck() ? StopReason::interval_empty
                                           : StopReason::band_starved);
          start_epoch(t, values);
          continue;
        }
        v1_.erase(i);
        v2_.erase(i);
        v3_.insert(i);
        filters_[static_cast<std::size_t>(i - 1)] = Filter::at_most(u0_);
        ledger_.count_unicast();
        emit(log_, t, "move", i, "to V3");
      }
      if (static_cast<int>(v1_.size()) == k_ && static_cast<int>(v3_.size()) == n_ - k_) {
        close_epoch(t, StopReason::handoff_to_scattered);
        CostTotals at = ledger_.totals();
        scat_.emplace(n_, k_, eps_, rng_, ledger_, log_);
        open_epoch(t, EpochKind::scattered, at);
        scat_->start(t, values);
      }
    }
  }

  void finish(Time t) override {
    if (epoch_open_) close_epoch(t, StopReason::trace_exhausted);
  }

  const std::vector<Filter>& filters() const override {
    return scat_ ? scat_->filters() : filters_;
  }

  std::vector<NodeId> output() const override {
    if (scat_) return scat_->output();
    std::set<NodeId> out(v1_.begin(), v1_.end());
    for (NodeId i : v2_) {
      if (static_cast<int>(out.size()) >= k_) break;
      out.insert(i);
    }
    if (static_cast<int>(out.size()) != k_)
      throw std::logic_error("HalfEpsMonitor: cannot assemble k members");
    return std::vector<NodeId>(out.begin(), out.end());
  }

  std::string phase_tag() const override {
    if (scat_) return std::string("half_eps_scattered_") + to_string(scat_->phase());
    return "half_eps_band";
  }

  int n() const override { return n_; }
  int k() const override { return k_; }
  Rat eps() const override { return eps_; }
  const std::vector<EpochRecord>& epochs() const override { return epochs_; }

  Value z() const { return z_; }

 private:
  void start_epoch(Time t, const std::vector<Value>& values) {
    CostTotals at = ledger_.totals();
    auto ranked = top_k_plus_one(values, k_, rng_, ledger_);
    Value vk = ranked[static_cast<std::size_t>(k_ - 1)].second;
    Value vk1 = ranked[static_cast<std::size_t>(k_)].second;
    if (Rat::of_value(vk1) < one_minus_eps_ * Rat::of_value(vk)) {
      scat_.emplace(n_, k_, eps_, rng_, ledger_, log_);
      open_epoch(t, EpochKind::scattered, at);
      scat_->start_with_probe(t, ranked);
      return;
    }
    scat_.reset();
    open_epoch(t, EpochKind::half_eps, at);
    z_ = vk;
    Rat z_rat = Rat::of_value(z_);
    ell0_ = (Rat(1) - eps_ / Rat(2)) * z_rat;
    u0_ = ell0_ / one_minus_eps_;
    // The full eps-band announcement identifies everyone the probe did not
    // already reveal: quiet nodes outside it can only sit below, since no
    // unprobed value exceeds v_{k+1}.
    band_announce(values, one_minus_eps_ * z_rat, z_rat / one_minus_eps_, ledger_);
    v1_.clear();
    v2_.clear();
    v3_.clear();
    for (NodeId i = 1; i <= n_; ++i) {
      Rat v = Rat::of_value(values[static_cast<std::size_t>(i - 1)]);
      if (v > u0_) v1_.insert(i);
      else if (v < ell0_) v3_.insert(i);
      else v2_.insert(i);
    }
    for (NodeId i = 1; i <= n_; ++i) {
      if (v1_.count(i)) filters_[static_cast<std::size_t>(i - 1)] = Filter::at_least(ell0_);
      else if (v3_.count(i)) filters_[static_cast<std::size_t>(i - 1)] = Filter::at_most(u0_);
      else filters_[static_cast<std::size_t>(i - 1)] = Filter::between(ell0_, u0_);
    }
    ledger_.count_broadcast();
    // Certificates restart with what this step already proves: the probed
    // leaders sit at or above z, initial V1 above the stretched cut, and
    // initial V3 below the floor. Window maxima restart with this row.
    over_ = v1_;
    risers_ = v1_;
    for (const auto& [id, value] : ranked)
      if (value >= z_) risers_.insert(id);
    deep_ = v3_;
    wmax_ = values;
    emit(log_, t, "dispatch", 0, "half_eps z=" + std::to_string(z_) +
                                     " |V1|=" + std::to_string(v1_.size()) +
                                     " |V2|=" + std::to_string(v2_.size()));
  }

  /// True once the window evidence refutes every fixed eps/2 assignment.
  bool certified_stuck() const {
    if (static_cast<int>(over_.size()) >= k_ + 1) return true;
    return static_cast<int>(deep_.size()) >= n_ - k_ + 1 &&
           static_cast<int>(risers_.size()) >= k_ + 1;
  }

  /// One broadcast asks every unaccounted node whether its value touched z
  /// since the epoch's probe; the positives run the usual existence
  /// cascade and join the riser certificate.
  void poll_risers(Time t) {
    std::vector<NodeId> hidden;
    for (NodeId i = 1; i <= n_; ++i)
      if (!risers_.count(i) && wmax_[static_cast<std::size_t>(i - 1)] >= z_)
        hidden.push_back(i);
    ledger_.count_broadcast();
    ExistenceResult res =
        existence_poll(hidden, static_cast<std::uint64_t>(n_), rng_, ledger_);
    for (NodeId s : res.senders) risers_.insert(s);
    emit(log_, t, "poll", 0, "risers +" + std::to_string(res.senders.size()));
  }

  void open_epoch(Time t, EpochKind kind, const CostTotals& cost_start) {
    EpochRecord rec;
    rec.kind = kind;
    rec.t_start = t;
    rec.cost_start = cost_start;
    epochs_.push_back(std::move(rec));
    epoch_open_ = true;
  }

  void close_epoch(Time t, StopReason reason) {
    EpochRecord& rec = epochs_.back();
    rec.t_end = t;
    rec.reason = reason;
    rec.cost_end = ledger_.totals();
    epoch_open_ = false;
  }

  int n_;
  int k_;
  Rat eps_;
  Rat one_minus_eps_;
  Rng& rng_;
  CostLedger& ledger_;
  EventLog* log_;

  std::vector<Filter> filters_;
  std::set<NodeId> v1_, v2_, v3_;
  std::set<NodeId> over_, risers_, deep_;  // cumulative per-epoch certificates
  std::vector<Value> wmax_;                // per-node maxima since the probe
  Value z_ = 0;
  Rat ell0_{0}, u0_{0};
  std::optional<ScatteredRun> scat_;
  std::vector<EpochRecord> epochs_;
  bool started_ = false;
  bool epoch_open_ = false;
};

}  // namespace topkmon
