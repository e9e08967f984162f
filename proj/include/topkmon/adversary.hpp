#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "topkmon/driver.hpp"
#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"
#include "topkmon/protocols/protocol.hpp"
#include "topkmon/rational.hpp"
#include "topkmon/rng.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// What a value source may inspect before producing the next row: the
/// clock, the published filter table, the server's current output and a
/// coarse phase label. The protocol's random draws are deliberately not
/// here; a source reacts to what the server said, never to the coins it
/// is about to flip.
struct ServerView {
  Time t;
  const std::vector<Filter>& filters;
  std::vector<NodeId> output;
  std::string phase;
};

/// Stateful value source driving one run. Concrete sources implement
/// produce(); the base checks every row against the declared width and
/// cap so a buggy source fails loudly instead of smuggling out-of-range
/// values into a run.
class AdaptiveAdversary {
 public:
  AdaptiveAdversary(int n, Value delta) : n_(n), delta_(delta) {
    if (n <= 0) throw std::invalid_argument("AdaptiveAdversary: need at least one node");
    if (delta > static_cast<Value>(std::numeric_limits<std::int64_t>::max()))
      throw std::invalid_argument("AdaptiveAdversary: cap too large for exact arithmetic");
  }
  virtual ~AdaptiveAdversary() = default;

  std::vector<Value> next_values(const ServerView& view) {
    std::vector<Value> row = produce(view);
    if (static_cast<int>(row.size()) != n_)
      throw std::logic_error("adversary: row width mismatch");
    for (Value v : row)
      if (v > delta_) throw std::logic_error("adversary: value exceeds the declared cap");
    return row;
  }

  int n_nodes() const { return n_; }
  Value delta_cap() const { return delta_; }

 private:
  virtual std::vector<Value> produce(const ServerView& view) = 0;

  int n_;
  Value delta_;
};

/// Keeps a crowd of sigma nodes level at y0 and, once the server fences
/// them, pulls one fenced node per step down to y1, lowest id first. y1
/// sits strictly under (1 - eps) * y0, so a server that certifies its
/// output must fence every raised member above y1, and each drop then
/// lands outside the dropped node's filter and costs a report. After
/// sigma - k drops the crowd is restored and the squeeze starts over.
/// Nodes beyond the crowd idle at y1 and never participate.
class LowerBoundAdversary : public AdaptiveAdversary {
 public:
  LowerBoundAdversary(int n, int k, const Rat& eps, Value y0, int phases, int sigma)
      : AdaptiveAdversary(n, y0), k_(k), sigma_(sigma), phases_(phases), y0_(y0) {
    if (!(Rat(0) < eps && eps < Rat(1)))
      throw std::invalid_argument("LowerBoundAdversary: eps must lie in (0, 1)");
    if (k < 1 || k >= sigma || sigma > n)
      throw std::invalid_argument("LowerBoundAdversary: need 1 <= k < sigma <= n");
    if (phases < 0) throw std::invalid_argument("LowerBoundAdversary: negative phase count");
    std::int64_t y1 = ((Rat(1) - eps) * Rat::of_value(y0)).floor() - 1;
    if (y1 < 0) throw std::invalid_argument("LowerBoundAdversary: drop target below zero");
    y1_ = static_cast<Value>(y1);
    row_.assign(static_cast<std::size_t>(n), y1_);
    std::fill(row_.begin(), row_.begin() + sigma_, y0_);
  }

  Value drop_target() const { return y1_; }

 private:
  std::vector<Value> produce(const ServerView& view) override {
    if (!armed_) {
      armed_ = true;  // let the server see the level crowd and fence it
      return row_;
    }
    if (done_phases_ >= phases_) return row_;
    if (drops_ == sigma_ - k_) {
      ++done_phases_;
      if (done_phases_ >= phases_) return row_;
      drops_ = 0;
      std::fill(row_.begin(), row_.begin() + sigma_, y0_);
      return row_;
    }
    if (static_cast<int>(view.filters.size()) != n_nodes())
      throw std::logic_error("LowerBoundAdversary: filter table width mismatch");
    Rat target = Rat::of_value(y1_);
    for (int i = 0; i < sigma_; ++i) {
      std::size_t u = static_cast<std::size_t>(i);
      if (row_[u] != y0_) continue;
      if (view.filters[u].lo > target) {
        row_[u] = y1_;
        ++drops_;
        return row_;
      }
    }
    throw std::logic_error(
        "LowerBoundAdversary: every raised node may fall to the drop target "
        "unnoticed; the server's filters do not certify its output");
  }

  int k_;
  int sigma_;
  int phases_;
  Value y0_;
  Value y1_ = 0;
  std::vector<Value> row_;
  bool armed_ = false;
  int drops_ = 0;
  int done_phases_ = 0;
};

inline std::unique_ptr<AdaptiveAdversary> lower_bound_adversary(int n, int k, const Rat& eps,
                                                                Value y0, int phases,
                                                                int sigma = -1) {
  return std::make_unique<LowerBoundAdversary>(n, k, eps, y0, phases,
                                               sigma < 0 ? n : sigma);
}

/// Converges on whatever fences the server publishes: each step it moves
/// one node just past its own filter, flipping between lifting an
/// outsider over its top and sinking a member under its floor. Against
/// an interval-narrowing server this squeezes the candidate interval
/// from both ends until it runs dry and the fences reset, then starts
/// squeezing the new ones.
class CrossingAdversary : public AdaptiveAdversary {
 public:
  CrossingAdversary(int n, Value delta, std::uint64_t seed)
      : AdaptiveAdversary(n, delta), rng_(seed) {
    if (delta < 4096)
      throw std::invalid_argument("CrossingAdversary: cap too small to spread the crowd");
    row_.resize(static_cast<std::size_t>(n));
    // Geometric head so neighboring ranks sit a factor two apart, with a
    // seed-dependent wobble small enough to keep the order; then a low
    // tail of distinct stragglers.
    for (int i = 1; i <= n; ++i) {
      Value v;
      if (i <= 8) {
        v = delta >> i;
        v = v - v / 16 + rng_.below(v / 8 + 1);
      } else {
        v = delta / 1024 + static_cast<Value>(n - i + 1);
      }
      row_[static_cast<std::size_t>(i - 1)] = v;
    }
  }

 private:
  std::vector<Value> produce(const ServerView& view) override {
    if (view.output.empty()) return row_;  // nothing published yet
    if (static_cast<int>(view.filters.size()) != n_nodes())
      throw std::logic_error("CrossingAdversary: filter table width mismatch");

    std::vector<char> member(static_cast<std::size_t>(n_nodes()) + 1, 0);
    for (NodeId id : view.output) member[static_cast<std::size_t>(id)] = 1;

    // A member can sink only if its floor has room below; an outsider
    // can rise only if its top is bounded and the step stays under the
    // cap.
    std::vector<std::pair<NodeId, Value>> sinks, lifts;
    for (NodeId id = 1; id <= n_nodes(); ++id) {
      const Filter& f = view.filters[static_cast<std::size_t>(id - 1)];
      if (member[static_cast<std::size_t>(id)]) {
        if (f.lo > Rat(0)) sinks.emplace_back(id, static_cast<Value>(f.lo.ceil() - 1));
      } else if (f.hi) {
        Value up = static_cast<Value>(f.hi->floor()) + 1;
        if (up <= delta_cap()) lifts.emplace_back(id, up);
      }
    }

    bool sink_first = rng_.coin_half();
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto& pool = ((attempt == 0) == sink_first) ? sinks : lifts;
      if (pool.empty()) continue;
      auto [id, v] = pool[rng_.below(pool.size())];
      row_[static_cast<std::size_t>(id - 1)] = v;
      return row_;
    }
    return row_;  // nowhere left to push
  }

  Rng rng_;
  std::vector<Value> row_;
};

inline std::unique_ptr<AdaptiveAdversary> crossing_adversary(int n, Value delta,
                                                             std::uint64_t seed) {
  return std::make_unique<CrossingAdversary>(n, delta, seed);
}

enum class GenKind { random_walk, iid_uniform, oscillator };

/// Knobs for the stochastic sources. delta caps every produced value.
/// The oscillator splits the row by id: pinned_high nodes at high_value,
/// then the oscillating crowd jittering around center, then everyone
/// else parked at low_value.
struct GenParams {
  int n = 0;
  Value delta = 0;
  Value step = 0;        // random_walk: per-step move, uniform in [-step, step]
  int pinned_high = 0;   // oscillator
  int oscillating = 0;   // oscillator
  Value center = 0;      // oscillator
  Value amplitude = 0;   // oscillator
  Value high_value = 0;  // oscillator: 0 means delta
  Value low_value = 0;   // oscillator
};

namespace detail {

class RandomWalkAdversary : public AdaptiveAdversary {
 public:
  RandomWalkAdversary(const GenParams& p, std::uint64_t seed)
      : AdaptiveAdversary(p.n, p.delta), step_(p.step), rng_(seed) {
    if (p.step > p.delta)
      throw std::invalid_argument("random_walk: step larger than the cap");
    row_.resize(static_cast<std::size_t>(p.n));
    for (auto& v : row_) v = rng_.between(0, p.delta);
    fresh_ = true;
  }

 private:
  std::vector<Value> produce(const ServerView&) override {
    if (fresh_) {
      fresh_ = false;
      return row_;
    }
    for (auto& v : row_) {
      std::int64_t moved = static_cast<std::int64_t>(v) +
                           static_cast<std::int64_t>(rng_.below(2 * step_ + 1)) -
                           static_cast<std::int64_t>(step_);
      moved = std::clamp<std::int64_t>(moved, 0, static_cast<std::int64_t>(delta_cap()));
      v = static_cast<Value>(moved);
    }
    return row_;
  }

  Value step_;
  Rng rng_;
  std::vector<Value> row_;
  bool fresh_ = false;
};

class IidUniformAdversary : public AdaptiveAdversary {
 public:
  IidUniformAdversary(const GenParams& p, std::uint64_t seed)
      : AdaptiveAdversary(p.n, p.delta), rng_(seed) {}

 private:
  std::vector<Value> produce(const ServerView&) override {
    std::vector<Value> row(static_cast<std::size_t>(n_nodes()));
    for (auto& v : row) v = rng_.between(0, delta_cap());
    return row;
  }

  Rng rng_;
};

class OscillatorAdversary : public AdaptiveAdversary {
 public:
  OscillatorAdversary(const GenParams& p, std::uint64_t seed)
      : AdaptiveAdversary(p.n, p.delta),
        pinned_high_(p.pinned_high),
        oscillating_(p.oscillating),
        center_(p.center),
        amplitude_(p.amplitude),
        high_(p.high_value == 0 ? p.delta : p.high_value),
        low_(p.low_value),
        rng_(seed) {
    if (pinned_high_ < 0 || oscillating_ < 0 || pinned_high_ + oscillating_ > p.n)
      throw std::invalid_argument("oscillator: node split does not fit the row");
    if (amplitude_ > center_)
      throw std::invalid_argument("oscillator: swing would go below zero");
    if (center_ > p.delta - amplitude_)
      throw std::invalid_argument("oscillator: swing would pass the cap");
    if (high_ > p.delta || low_ > p.delta)
      throw std::invalid_argument("oscillator: pinned value above the cap");
  }

 private:
  std::vector<Value> produce(const ServerView&) override {
    std::vector<Value> row(static_cast<std::size_t>(n_nodes()), low_);
    for (int i = 0; i < pinned_high_; ++i) row[static_cast<std::size_t>(i)] = high_;
    for (int i = pinned_high_; i < pinned_high_ + oscillating_; ++i)
      row[static_cast<std::size_t>(i)] =
          center_ - amplitude_ + rng_.below(2 * amplitude_ + 1);
    return row;
  }

  int pinned_high_;
  int oscillating_;
  Value center_;
  Value amplitude_;
  Value high_;
  Value low_;
  Rng rng_;
};

}  // namespace detail

inline std::unique_ptr<AdaptiveAdversary> stochastic_generator(GenKind kind,
                                                               const GenParams& params,
                                                               std::uint64_t seed) {
  switch (kind) {
    case GenKind::random_walk:
      return std::make_unique<detail::RandomWalkAdversary>(params, seed);
    case GenKind::iid_uniform:
      return std::make_unique<detail::IidUniformAdversary>(params, seed);
    case GenKind::oscillator:
      return std::make_unique<detail::OscillatorAdversary>(params, seed);
  }
  throw std::invalid_argument("stochastic_generator: unknown kind");
}

/// Plays a value source against a live monitor for `horizon` steps,
/// checking the shared validity layer after every step unless told not
/// to. The source is consulted strictly before the step's protocol
/// exchange, so it reacts to published state only, never to the coins
/// the step is about to flip. Returns the realized rows so the run can
/// be replayed or scored by the offline planners.
inline Trace play(AdaptiveAdversary& adversary, Monitor& monitor, CostLedger& ledger,
                  Time horizon, bool check = true) {
  if (adversary.n_nodes() != monitor.n())
    throw std::invalid_argument("play: source and monitor disagree on n");
  Trace realized(adversary.n_nodes());
  SimDriver driver(monitor, check);
  const std::vector<Filter> unpublished(static_cast<std::size_t>(monitor.n()),
                                        Filter::everything());
  for (Time t = 1; t <= horizon; ++t) {
    std::vector<Value> row =
        t == 1 ? adversary.next_values(ServerView{t, unpublished, {}, "idle"})
               : adversary.next_values(ServerView{t, monitor.filters(), monitor.output(),
                                                  monitor.phase_tag()});
    realized.append(row);
    ledger.begin_step(t);
    driver.step(t, row);
  }
  monitor.finish(horizon);
  return realized;
}

}  // namespace topkmon
