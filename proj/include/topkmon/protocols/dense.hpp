#pragma once

#include <cassert>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "topkmon/comms.hpp"
#include "topkmon/protocols/events.hpp"
#include "topkmon/protocols/interval.hpp"
#include "topkmon/protocols/protocol.hpp"

namespace topkmon {

/// Epoch driver for streams whose k-th and (k+1)-st values (nearly)
/// coincide at some pivot z. All undecided nodes share a band around z cut
/// at a rational boundary l_r; nodes certified above the cut's stretched
/// twin u_r = l_r/(1-eps) collect in S1, nodes certified below l_r in S2,
/// and L brackets where an undisturbed offline boundary would sit. A node
/// certified on both sides at once is contradictory evidence; a sub-run
/// re-examines the lower half of L until the contradiction resolves into
/// a permanent move or a halving of L itself.
///
/// Class invariants between violations: V1, V3 and the band partition the
/// nodes, S1 and S2 are disjoint subsets of the band (their overlap is
/// exactly one node while a sub-run is active), |V1 u S1| <= k and
/// |V3 u S2| <= n-k.
class DenseRun {
 public:
  DenseRun(int n, int k, Rat eps, Rng& rng, CostLedger& ledger, EventLog* log = nullptr)
      : n_(n), k_(k), eps_(std::move(eps)), one_minus_eps_(Rat(1) - eps_),
        rng_(rng), ledger_(ledger), log_(log), filters_(static_cast<std::size_t>(n)) {
    if (k < 1 || k >= n) throw std::invalid_argument("DenseRun: need 1 <= k < n");
    if (!(eps_ >= Rat(0)) || !(eps_ < Rat(1)))
      throw std::invalid_argument("DenseRun: need 0 <= eps < 1");
  }

  /// Start from a ranking the dispatcher already paid for. With the k-th
  /// and (k+1)-st values equal the band goes live at once; otherwise a
  /// plain two-filter layout waits for the first crossing to name z.
  void start(Time t, const std::vector<Value>& values,
             const std::vector<std::pair<NodeId, Value>>& ranked) {
    if (static_cast<int>(ranked.size()) < k_ + 1)
      throw std::invalid_argument("DenseRun: ranking too short");
    t_start_ = t;
    pre_members_.clear();
    for (int j = 0; j < k_; ++j) pre_members_.insert(ranked[static_cast<std::size_t>(j)].first);
    Value vk = ranked[static_cast<std::size_t>(k_ - 1)].second;
    Value vk1 = ranked[static_cast<std::size_t>(k_)].second;
    if (vk == vk1) {
      // Classifying against a pivot equal to the row's own k-th value
      // keeps both outer classes within their quotas.
      if (init_live(t, values, vk)) throw std::logic_error("DenseRun: fresh pivot infeasible");
      return;
    }
    stage_ = Stage::pre;
    pre_vk_ = vk;
    pre_vk1_ = vk1;
    for (NodeId i = 1; i <= n_; ++i)
      filters_[static_cast<std::size_t>(i - 1)] =
          pre_members_.count(i) ? Filter::at_least(Rat::of_value(pre_vk1_))
                                : Filter::at_most(Rat::of_value(pre_vk_));
    ledger_.count_broadcast();
    emit(log_, t, "broadcast", 0, "dense pre vk=" + std::to_string(vk) +
                                      " vk1=" + std::to_string(vk1));
  }

  std::optional<StopReason> on_step(Time t, const std::vector<Value>& values) {
    int guard = 0;
    const int cap = 1024 * n_ + 4096;
    for (;;) {
      ViolationReport rep = report_violations(filters_, values, rng_, ledger_);
      if (!rep.any()) return std::nullopt;
      if (++guard > cap) throw std::logic_error("DenseRun: violation loop did not settle");
      const Violation& v = rep.first();
      emit(log_, t, "violation", v.id,
           std::string(to_string(v.side)) + " v=" + std::to_string(v.value) + class_tag(v.id));
      if (stage_ == Stage::pre) {
        // The crossing side names the pivot: a riser pins z to the old
        // k-th value, a sinking member to the old (k+1)-st.
        auto res = init_live(t, values, v.side == ViolationSide::from_below ? pre_vk_ : pre_vk1_);
        if (res) return res;
        continue;
      }
      auto res = sub_ ? handle_sub(t, v) : handle_dense(t, v);
      if (res) return res;
    }
  }

  const std::vector<Filter>& filters() const { return filters_; }
  bool live() const { return stage_ == Stage::live; }
  bool in_sub() const { return sub_.has_value(); }
  const GuessInterval& interval() const { return l_; }
  Value z() const { return z_; }
  int round() const { return round_; }
  Time start_time() const { return t_start_; }
  const DenseStats& stats() const { return stats_; }
  std::string stage_tag() const {
    if (stage_ == Stage::pre) return "dense_pre";
    return sub_ ? "dense_sub" : "dense";
  }

  /// Current output set: the certified-high nodes plus the lowest-id band
  /// nodes needed to reach k. During a sub-run the contradictory nodes
  /// count as members; their floor l' is what the layout's validity
  /// hinges on.
  std::vector<NodeId> output() const {
    if (stage_ == Stage::pre)
      return std::vector<NodeId>(pre_members_.begin(), pre_members_.end());
    std::set<NodeId> out(v1_.begin(), v1_.end());
    const std::set<NodeId>& high = sub_ ? sub_->s1p : s1_;
    const std::set<NodeId>& low = sub_ ? sub_->s2p : s2_;
    for (NodeId i : high)
      if (sub_ || !s2_.count(i)) out.insert(i);
    if (static_cast<int>(out.size()) > k_)
      throw std::logic_error("DenseRun: more than k certified members");
    for (NodeId i = 1; i <= n_ && static_cast<int>(out.size()) < k_; ++i) {
      if (v1_.count(i) || v3_.count(i) || high.count(i) || low.count(i)) continue;
      out.insert(i);
    }
    if (static_cast<int>(out.size()) != k_)
      throw std::logic_error("DenseRun: cannot fill k members from the band");
    return std::vector<NodeId>(out.begin(), out.end());
  }

 private:
  enum class Stage { pre, live };
  enum class Dir { lower, upper };

  struct Sub {
    GuessInterval lp;
    std::set<NodeId> s1p, s2p;
    int round = 0;
    Rat ellp{0}, up{0};
    std::optional<NodeId> last_dual_above;
    NodeId trigger = 0;
  };

  std::optional<StopReason> init_live(Time t, const std::vector<Value>& values, Value z) {
    if (z > static_cast<Value>(INT64_MAX))
      throw std::overflow_error("DenseRun: pivot exceeds tracked range");
    stage_ = Stage::live;
    z_ = z;
    z_low_ = one_minus_eps_ * Rat::of_value(z_);
    z_over_ = Rat::of_value(z_) / one_minus_eps_;
    v1_.clear();
    v3_.clear();
    s1_.clear();
    s2_.clear();
    sub_.reset();
    // One announcement finds the band. Everyone else is classified by
    // silence: a quiet node above the band must already have been held
    // above (1-eps)z by the previous layout, a quiet node below it held
    // under z/(1-eps), so reading the current row for them reveals
    // nothing the layout did not.
    std::vector<NodeId> inside = band_announce(values, z_low_, z_over_, ledger_);
    std::set<NodeId> band(inside.begin(), inside.end());
    for (NodeId i = 1; i <= n_; ++i) {
      if (band.count(i)) continue;
      if (Rat::of_value(values[static_cast<std::size_t>(i - 1)]) > z_over_) v1_.insert(i);
      else v3_.insert(i);
    }
    l_ = GuessInterval::of(z_low_.ceil(), static_cast<std::int64_t>(z_));
    round_ = 0;
    stats_ = DenseStats{};
    stats_.z = z_;
    stats_.l0_count = l_.count();
    // A pivot named in the waiting stage reflects an old probe; if the row
    // has since left more than k nodes above the band or more than n-k
    // below it, no layout around z can output k members and the epoch is
    // over before it starts (the dispatching monitor re-probes).
    if (static_cast<int>(v1_.size()) > k_ || static_cast<int>(v3_.size()) > n_ - k_) {
      emit(log_, t, "dispatch", 0, "dense stillborn z=" + std::to_string(z_) +
                                       " |V1|=" + std::to_string(v1_.size()) +
                                       " |V3|=" + std::to_string(v3_.size()));
      return StopReason::interval_empty;
    }
    recompute_cuts();
    broadcast_filters(t, "dense init z=" + std::to_string(z_));
    emit(log_, t, "dispatch", 0, "dense live |V1|=" + std::to_string(v1_.size()) +
                                     " |V3|=" + std::to_string(v3_.size()));
    return std::nullopt;
  }

  // ---- dispatch, main protocol ----------------------------------------

  std::optional<StopReason> handle_dense(Time t, const Violation& v) {
    NodeId i = v.id;
    bool below = v.side == ViolationSide::from_below;
    if (v1_.count(i)) return halve_then_check(t, Dir::lower);
    if (v3_.count(i)) return halve_then_check(t, Dir::upper);
    bool in1 = s1_.count(i) > 0, in2 = s2_.count(i) > 0;
    if (in1 && in2) throw std::logic_error("DenseRun: dual node outside sub");
    if (!in1 && !in2) {
      if (below) {
        if (above_count() + 1 > k_) return halve_then_check(t, Dir::upper);
        s1_.insert(i);
        unicast_filter(t, i, "joins S1");
      } else {
        if (below_count() + 1 > n_ - k_) return halve_then_check(t, Dir::lower);
        s2_.insert(i);
        unicast_filter(t, i, "joins S2");
      }
    } else if (in1) {
      if (below) {
        // certified above z/(1-eps): out of the band for good
        move_node(t, i, &v1_);
      } else {
        s2_.insert(i);
        enter_sub(t, i);
        return std::nullopt;  // split check belongs to the sub now
      }
    } else {
      if (!below) {
        move_node(t, i, &v3_);
      } else {
        // The riser would be the (k+1)-st node evidenced above the cut;
        // that count is the halving rule's trigger and preempts the
        // sub-run (which could not output k members around one more
        // candidate anyway).
        if (above_count() + 1 > k_) return halve_then_check(t, Dir::upper);
        s1_.insert(i);
        enter_sub(t, i);
        return std::nullopt;
      }
    }
    if (dense_split()) return StopReason::handoff_to_scattered;
    return std::nullopt;
  }

  // ---- dispatch, sub-run -----------------------------------------------

  std::optional<StopReason> handle_sub(Time t, const Violation& v) {
    NodeId i = v.id;
    bool below = v.side == ViolationSide::from_below;
    if (v1_.count(i)) return finish_sub(t, SubOutcomeKind::halve_lower, 0);
    if (v3_.count(i)) return sub_halve_then_check(t, Dir::upper);
    bool in1 = sub_->s1p.count(i) > 0, in2 = sub_->s2p.count(i) > 0;
    if (!in1 && !in2) {
      if (below) {
        if (sub_above_count() + 1 > k_) return sub_halve_then_check(t, Dir::upper);
        sub_->s1p.insert(i);
        unicast_filter(t, i, "joins S1'");
      } else {
        if (sub_below_with(i) > n_ - k_) return finish_sub(t, SubOutcomeKind::halve_lower, 0);
        sub_->s2p.insert(i);
        unicast_filter(t, i, "joins S2'");
      }
    } else if (in1 && !in2) {
      if (below) {
        move_node(t, i, &v1_);
      } else {
        sub_->s2p.insert(i);
        unicast_filter(t, i, "descends to dual");
      }
    } else if (!in1 && in2) {
      if (!below) {
        move_node(t, i, &v3_);
      } else {
        // same preemption as outside: a (k+1)-st above-the-cut witness
        // halves L' rather than overfilling the certified-high side
        if (sub_above_count() + 1 > k_) return sub_halve_then_check(t, Dir::upper);
        sub_->s1p.insert(i);
        unicast_filter(t, i, "ascends to dual");
      }
    } else {
      if (below) return finish_sub(t, SubOutcomeKind::move_to_v1, i);
      sub_->last_dual_above = i;
      return sub_halve_then_check(t, Dir::lower);
    }
    if (sub_split()) return finish_sub(t, SubOutcomeKind::handoff_to_scattered, 0);
    return std::nullopt;
  }

  std::optional<StopReason> halve_then_check(Time t, Dir dir) {
    auto res = apply_halving(t, dir);
    if (res) return res;
    if (dense_split()) return StopReason::handoff_to_scattered;
    return std::nullopt;
  }

  std::optional<StopReason> sub_halve_then_check(Time t, Dir dir) {
    auto res = sub_halve(t, dir);
    if (res) return res;
    // the halving may have drained L' and resolved the run already
    if (sub_ && sub_split()) return finish_sub(t, SubOutcomeKind::handoff_to_scattered, 0);
    return std::nullopt;
  }

  // ---- interval surgery --------------------------------------------------

  std::optional<StopReason> apply_halving(Time t, Dir dir) {
    std::int64_t before = l_.count();
    l_ = dir == Dir::lower ? l_.halve_lower() : l_.halve_upper();
    if (dir == Dir::lower) s2_.clear();
    else s1_.clear();
    stats_.halve_sizes.emplace_back(before, l_.count());
    emit(log_, t, "halve", 0,
         std::string("dense ") + (dir == Dir::lower ? "lower" : "upper") + " L=" + l_.str());
    if (l_.empty()) return StopReason::interval_empty;
    ++round_;
    ++stats_.rounds;
    recompute_cuts();
    broadcast_filters(t, "round " + std::to_string(round_));
    return std::nullopt;
  }

  std::optional<StopReason> sub_halve(Time t, Dir dir) {
    std::int64_t before = sub_->lp.count();
    sub_->lp = dir == Dir::lower ? sub_->lp.halve_lower() : sub_->lp.halve_upper();
    if (dir == Dir::lower) sub_->s2p.clear();
    else sub_->s1p = s1_;
    stats_.sub_halve_sizes.emplace_back(before, sub_->lp.count());
    emit(log_, t, "halve", 0,
         std::string("sub ") + (dir == Dir::lower ? "lower" : "upper") + " L'=" + sub_->lp.str());
    if (sub_->lp.empty()) {
      // no room left below: the contradictory node belongs under the band
      NodeId node = sub_->last_dual_above.value_or(sub_->trigger);
      return finish_sub(t, SubOutcomeKind::move_to_v3, node);
    }
    ++sub_->round;
    recompute_sub_cuts();
    broadcast_filters(t, "sub round " + std::to_string(sub_->round));
    return std::nullopt;
  }

  void enter_sub(Time t, NodeId trigger) {
    assert(!sub_);
    ++stats_.sub_calls;
    Sub s;
    s.trigger = trigger;
    s.lp = l_.lower_half();  // L intersected with [(1-eps)z, l_r]
    s.s1p = s1_;
    sub_ = std::move(s);
    recompute_sub_cuts();
    broadcast_filters(t, "sub enter trigger=" + std::to_string(trigger));
    emit(log_, t, "dispatch", trigger, "sub L'=" + sub_->lp.str());
  }

  std::optional<StopReason> finish_sub(Time t, SubOutcomeKind kind, NodeId node) {
    stats_.sub_outcomes.push_back(kind);
    emit(log_, t, "dispatch", node, "sub outcome " + to_string(kind));
    sub_.reset();
    bool republished = false;
    switch (kind) {
      case SubOutcomeKind::halve_lower:
      case SubOutcomeKind::halve_upper: {
        auto res =
            apply_halving(t, kind == SubOutcomeKind::halve_lower ? Dir::lower : Dir::upper);
        if (res) return res;
        republished = true;
        break;
      }
      case SubOutcomeKind::handoff_to_scattered:
        return StopReason::handoff_to_scattered;
      case SubOutcomeKind::move_to_v1:
        v1_.insert(node);
        s1_.erase(node);
        s2_.erase(node);
        break;
      case SubOutcomeKind::move_to_v3:
        v3_.insert(node);
        s1_.erase(node);
        s2_.erase(node);
        break;
    }
    // The run that just ended may have left its own trigger contradictory
    // when the resolved node was a different dual; examine it next.
    for (NodeId i : s1_)
      if (s2_.count(i)) {
        enter_sub(t, i);
        return std::nullopt;
      }
    // Nodes certified below while the sub held judgment open can leave the
    // resting layout short of k members. More than n-k reports below l_r
    // justify a lower halving; once even the permanent class V3 outnumbers
    // n-k, every k-set is contradicted and the epoch is spent.
    while (below_count() > n_ - k_) {
      if (s2_.empty()) {
        emit(log_, t, "dispatch", 0, "dense exhausted: |V3| exceeds n-k");
        return StopReason::interval_empty;
      }
      auto res = apply_halving(t, Dir::lower);
      if (res) return res;
      republished = true;
    }
    if (!republished) broadcast_filters(t, "sub exit");
    if (dense_split()) return StopReason::handoff_to_scattered;
    return std::nullopt;
  }

  // ---- bookkeeping -------------------------------------------------------

  void move_node(Time t, NodeId i, std::set<NodeId>* dest) {
    s1_.erase(i);
    s2_.erase(i);
    if (sub_) {
      sub_->s1p.erase(i);
      sub_->s2p.erase(i);
    }
    dest->insert(i);
    emit(log_, t, "move", i, dest == &v1_ ? "to V1" : "to V3");
    unicast_filter(t, i, dest == &v1_ ? "now V1" : "now V3");
  }

  std::int64_t above_count() const {
    return static_cast<std::int64_t>(v1_.size() + s1_.size());
  }
  std::int64_t below_count() const {
    return static_cast<std::int64_t>(v3_.size() + s2_.size());
  }
  std::int64_t sub_above_count() const {
    return static_cast<std::int64_t>(v1_.size() + sub_->s1p.size());
  }
  std::int64_t sub_below_count() const {
    // s2 and s2' both sit inside the band but may overlap each other
    std::int64_t extra = 0;
    for (NodeId i : sub_->s2p)
      if (!s2_.count(i)) ++extra;
    return static_cast<std::int64_t>(v3_.size() + s2_.size()) + extra;
  }
  std::int64_t sub_below_with(NodeId i) const {
    std::int64_t base = sub_below_count();
    bool counted = v3_.count(i) || s2_.count(i) || sub_->s2p.count(i);
    return base + (counted ? 0 : 1);
  }

  bool dense_split() const {
    if (above_count() != k_ || below_count() != n_ - k_) return false;
    for (NodeId i : s1_)
      if (s2_.count(i)) return false;
    return true;
  }

  bool sub_split() const {
    if (sub_above_count() != k_ || sub_below_count() != n_ - k_) return false;
    for (NodeId i : sub_->s1p)
      if (s2_.count(i) || sub_->s2p.count(i)) return false;
    return true;
  }

  void recompute_cuts() {
    ell_r_ = Rat(l_.lo) + Rat(l_.hi - l_.lo, 2);
    u_r_ = ell_r_ / one_minus_eps_;
  }

  void recompute_sub_cuts() {
    sub_->ellp = Rat(sub_->lp.lo) + Rat(sub_->lp.hi - sub_->lp.lo, 2);
    sub_->up = sub_->ellp / one_minus_eps_;
  }

  Filter filter_for(NodeId i) const {
    if (v1_.count(i)) return Filter::at_least(ell_r_);
    if (v3_.count(i)) return Filter::at_most(sub_ ? sub_->up : u_r_);
    if (sub_) {
      bool a = sub_->s1p.count(i) > 0, b = sub_->s2p.count(i) > 0;
      if (a && b) return Filter::between(sub_->ellp, z_over_);
      if (a) return Filter::between(ell_r_, z_over_);
      if (b) return Filter::between(z_low_, sub_->up);
      return Filter::between(ell_r_, sub_->up);
    }
    bool a = s1_.count(i) > 0, b = s2_.count(i) > 0;
    if (a && b) throw std::logic_error("DenseRun: dual node in a resting layout");
    if (a) return Filter::between(ell_r_, z_over_);
    if (b) return Filter::between(z_low_, u_r_);
    return Filter::between(ell_r_, u_r_);
  }

  void broadcast_filters(Time t, const std::string& why) {
    for (NodeId i = 1; i <= n_; ++i) filters_[static_cast<std::size_t>(i - 1)] = filter_for(i);
    ledger_.count_broadcast();
    emit(log_, t, "broadcast", 0, "dense " + why);
  }

  void unicast_filter(Time t, NodeId i, const std::string& why) {
    filters_[static_cast<std::size_t>(i - 1)] = filter_for(i);
    ledger_.count_unicast();
    emit(log_, t, "move", i, why);
  }

  std::string class_tag(NodeId i) const {
    if (stage_ == Stage::pre) return " pre";
    if (v1_.count(i)) return " V1";
    if (v3_.count(i)) return " V3";
    std::string tag = " V2";
    if (s1_.count(i)) tag += "+S1";
    if (s2_.count(i)) tag += "+S2";
    if (sub_) {
      if (sub_->s1p.count(i)) tag += "+S1'";
      if (sub_->s2p.count(i)) tag += "+S2'";
    }
    return tag;
  }

  int n_;
  int k_;
  Rat eps_;
  Rat one_minus_eps_;
  Rng& rng_;
  CostLedger& ledger_;
  EventLog* log_;

  Stage stage_ = Stage::pre;
  std::vector<Filter> filters_;
  std::set<NodeId> pre_members_;
  Value pre_vk_ = 0, pre_vk1_ = 0;

  Value z_ = 0;
  Rat z_low_{0}, z_over_{0};
  std::set<NodeId> v1_, v3_, s1_, s2_;
  GuessInterval l_;
  Rat ell_r_{0}, u_r_{0};
  int round_ = 0;
  std::optional<Sub> sub_;
  DenseStats stats_;
  Time t_start_ = 0;
};

}  // namespace topkmon
