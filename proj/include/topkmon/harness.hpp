#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "topkmon/adversary.hpp"
#include "topkmon/io.hpp"
#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"
#include "topkmon/offline.hpp"
#include "topkmon/protocols/midpoint.hpp"
#include "topkmon/protocols/monitors.hpp"
#include "topkmon/rational.hpp"
#include "topkmon/rng.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

enum class ProtocolKind { midpoint, eps_topk, half_eps };

inline std::string to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::midpoint: return "midpoint";
    case ProtocolKind::eps_topk: return "eps_topk";
    case ProtocolKind::half_eps: return "half_eps";
  }
  return "?";
}

/// Accepts the regime names as aliases: scattered and dense both run the
/// dispatching monitor, which probes and picks the regime itself.
inline ProtocolKind protocol_kind_from(const std::string& name) {
  if (name == "midpoint" || name == "exact") return ProtocolKind::midpoint;
  if (name == "eps_topk" || name == "scattered" || name == "dense")
    return ProtocolKind::eps_topk;
  if (name == "half_eps") return ProtocolKind::half_eps;
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

enum class AdversaryKind {
  random_walk,
  iid_uniform,
  oscillator,
  crossing,
  lower_bound,
  replay,
};

inline AdversaryKind adversary_kind_from(const std::string& name) {
  if (name == "random_walk" || name == "walk") return AdversaryKind::random_walk;
  if (name == "iid_uniform" || name == "iid") return AdversaryKind::iid_uniform;
  if (name == "oscillator") return AdversaryKind::oscillator;
  if (name == "crossing") return AdversaryKind::crossing;
  if (name == "lower_bound" || name == "squeeze") return AdversaryKind::lower_bound;
  if (name == "replay") return AdversaryKind::replay;
  throw std::invalid_argument("unknown adversary '" + name + "'");
}

inline std::string to_string(AdversaryKind a) {
  switch (a) {
    case AdversaryKind::random_walk: return "random_walk";
    case AdversaryKind::iid_uniform: return "iid_uniform";
    case AdversaryKind::oscillator: return "oscillator";
    case AdversaryKind::crossing: return "crossing";
    case AdversaryKind::lower_bound: return "lower_bound";
    case AdversaryKind::replay: return "replay";
  }
  return "?";
}

/// Which value source to run and its knobs. Row width and value cap
/// always come from the enclosing config; the `gen` fields n and delta
/// are ignored.
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::iid_uniform;
  GenParams gen;                // random_walk / iid_uniform / oscillator
  Value y0 = 0;                 // lower_bound: crowd level
  int phases = 0;               // lower_bound
  int sigma = -1;               // lower_bound crowd width, -1 for all of n
  std::optional<Trace> replay;  // replay: the rows to feed back
};

struct ExperimentConfig {
  int n = 0;
  int k = 0;
  Rat eps{1, 2};
  std::optional<Rat> eps_prime;  // tighter slack the third oracle plans with
  Value delta = 0;
  Time horizon = 0;
  ProtocolKind protocol = ProtocolKind::eps_topk;
  AdversarySpec adversary;
  std::vector<std::uint64_t> seeds;
  double calibration = 1.0;  // the constant C in the bound formulas
  bool check_validity = true;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.k < 1 || cfg.k >= cfg.n)
    throw std::invalid_argument("ExperimentConfig: need 1 <= k < n");
  if (!(Rat(0) < cfg.eps && cfg.eps < Rat(1)))
    throw std::invalid_argument("ExperimentConfig: need 0 < eps < 1");
  if (cfg.eps_prime) {
    if (!(Rat(0) < *cfg.eps_prime) || *cfg.eps_prime > cfg.eps / Rat(2))
      throw std::invalid_argument("ExperimentConfig: need 0 < eps_prime <= eps/2");
  }
  if (cfg.delta < 1) throw std::invalid_argument("ExperimentConfig: need delta >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("ExperimentConfig: need horizon >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("ExperimentConfig: need at least one seed");
  if (cfg.calibration <= 0)
    throw std::invalid_argument("ExperimentConfig: calibration must be positive");
  if (cfg.adversary.kind == AdversaryKind::replay) {
    if (!cfg.adversary.replay)
      throw std::invalid_argument("ExperimentConfig: replay needs a trace");
    if (cfg.adversary.replay->n_nodes() != cfg.n)
      throw std::invalid_argument("ExperimentConfig: replay trace width differs from n");
    if (cfg.adversary.replay->horizon() < cfg.horizon)
      throw std::invalid_argument("ExperimentConfig: replay trace shorter than the horizon");
  }
}

/// Feeds back prerecorded rows, ignoring everything the server publishes.
class ReplayAdversary : public AdaptiveAdversary {
 public:
  explicit ReplayAdversary(Trace trace)
      : AdaptiveAdversary(trace.n_nodes(), peak(trace)), trace_(std::move(trace)) {}

 private:
  static Value peak(const Trace& trace) {
    Value top = 0;
    for (Time t = 1; t <= trace.horizon(); ++t)
      for (Value v : trace.row(t)) top = std::max(top, v);
    return top;
  }

  std::vector<Value> produce(const ServerView&) override {
    if (cursor_ >= trace_.horizon()) throw std::logic_error("ReplayAdversary: trace ran dry");
    return trace_.row(++cursor_);
  }

  Trace trace_;
  Time cursor_ = 0;
};

inline std::unique_ptr<AdaptiveAdversary> make_adversary(const ExperimentConfig& cfg,
                                                         std::uint64_t seed) {
  const AdversarySpec& spec = cfg.adversary;
  GenParams gen = spec.gen;
  gen.n = cfg.n;
  gen.delta = cfg.delta;
  switch (spec.kind) {
    case AdversaryKind::random_walk:
      return stochastic_generator(GenKind::random_walk, gen, seed);
    case AdversaryKind::iid_uniform:
      return stochastic_generator(GenKind::iid_uniform, gen, seed);
    case AdversaryKind::oscillator:
      return stochastic_generator(GenKind::oscillator, gen, seed);
    case AdversaryKind::crossing:
      return crossing_adversary(cfg.n, cfg.delta, seed);
    case AdversaryKind::lower_bound:
      return lower_bound_adversary(cfg.n, cfg.k, cfg.eps, spec.y0, spec.phases, spec.sigma);
    case AdversaryKind::replay:
      return std::make_unique<ReplayAdversary>(*spec.replay);
  }
  throw std::invalid_argument("make_adversary: unknown kind");
}

inline std::unique_ptr<Monitor> make_monitor(const ExperimentConfig& cfg, Rng& rng,
                                             CostLedger& ledger, EventLog* log = nullptr) {
  switch (cfg.protocol) {
    case ProtocolKind::midpoint:
      return std::make_unique<MidpointMonitor>(cfg.n, cfg.k, rng, ledger, log);
    case ProtocolKind::eps_topk:
      return std::make_unique<EpsTopkMonitor>(cfg.n, cfg.k, cfg.eps, rng, ledger, log);
    case ProtocolKind::half_eps:
      return std::make_unique<HalfEpsMonitor>(cfg.n, cfg.k, cfg.eps, rng, ledger, log);
  }
  throw std::invalid_argument("make_monitor: unknown protocol");
}

struct RatioPair {
  double vs_reconfig = 0;  // online messages / plan reconfig_events
  double vs_detailed = 0;  // online messages / plan detailed_cost
};

inline RatioPair ratios_against(std::int64_t messages, const OptSchedule& plan) {
  RatioPair r;
  r.vs_reconfig = static_cast<double>(messages) / static_cast<double>(plan.reconfig_events);
  r.vs_detailed = static_cast<double>(messages) / static_cast<double>(plan.detailed_cost);
  return r;
}

/// Everything one seed produced. The plans were computed on `realized`,
/// so every ratio compares an online run and an oracle on the same rows.
struct SeedRun {
  std::uint64_t seed = 0;
  Trace realized{1};
  CostLedger ledger;
  std::vector<EpochRecord> epochs;
  OptSchedule plan_exact;
  OptSchedule plan_eps;
  std::optional<OptSchedule> plan_eps_prime;
  int sigma_observed = 0;
  RatioPair vs_exact;
  RatioPair vs_eps;
  std::optional<RatioPair> vs_eps_prime;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedRun> runs;
  int sigma_observed = 0;  // max over seeds
  double mean_messages = 0;
  RatioPair mean_vs_exact;
  RatioPair mean_vs_eps;
  std::optional<RatioPair> mean_vs_eps_prime;
  std::map<std::string, double> predicted_bounds;
  double wall_clock_sec = 0;  // the one field runs are allowed to disagree on
};

enum class BoundFormula { midpoint, scattered, dense, half_eps, existence };

inline BoundFormula bound_formula_from(const std::string& name) {
  if (name == "midpoint") return BoundFormula::midpoint;
  if (name == "scattered") return BoundFormula::scattered;
  if (name == "dense") return BoundFormula::dense;
  if (name == "half_eps") return BoundFormula::half_eps;
  if (name == "existence") return BoundFormula::existence;
  throw std::invalid_argument("predict_bound: unknown formula '" + name + "'");
}

struct BoundParams {
  int n = 0;
  int k = 0;
  int sigma = 0;
  double delta = 0;
  Rat eps{1, 2};
  double eps_vk = 0;  // eps times the k-th value, the dense interval scale
  double c = 1.0;
};

namespace detail {

/// Base-2 log with the degenerate cases clamped up to 1, so bound
/// formulas never vanish or go negative on tiny parameters.
inline double clog2(double x) {
  if (x <= 0) throw std::invalid_argument("predict_bound: parameters must be positive");
  return std::max(1.0, std::log2(x));
}

inline double cloglog2(double x) {
  if (x <= 0) throw std::invalid_argument("predict_bound: parameters must be positive");
  return std::max(1.0, std::log2(std::log2(std::max(x, 2.0))));
}

inline void need_positive(bool ok) {
  if (!ok) throw std::invalid_argument("predict_bound: parameters must be positive");
}

inline double inv_eps(const Rat& eps) {
  if (!(Rat(0) < eps && eps < Rat(1)))
    throw std::invalid_argument("predict_bound: need 0 < eps < 1");
  return (Rat(1) / eps).to_double();
}

}  // namespace detail

/// Evaluates the per-epoch message bound the named strategy promises,
/// scaled by the calibration constant c. All logs are base 2 and clamp
/// to at least 1.
inline double predict_bound(BoundFormula formula, const BoundParams& p) {
  using detail::clog2;
  using detail::cloglog2;
  using detail::need_positive;
  switch (formula) {
    case BoundFormula::existence:
      return 6.0;  // flat expected-uplink constant, no calibration
    case BoundFormula::midpoint:
      need_positive(p.k >= 1 && p.n >= 1 && p.c > 0);
      return p.c * (p.k * clog2(p.n) + clog2(p.delta));
    case BoundFormula::scattered:
      need_positive(p.k >= 1 && p.n >= 1 && p.c > 0);
      return p.c * (p.k * clog2(p.n) + cloglog2(p.delta) + clog2(detail::inv_eps(p.eps)));
    case BoundFormula::dense: {
      need_positive(p.sigma >= 1 && p.c > 0);
      double l = clog2(p.eps_vk);  // one sub run costs c * sigma * l
      return p.c * (p.sigma * p.sigma * l + p.sigma * l * l) + cloglog2(p.delta) +
             clog2(detail::inv_eps(p.eps));
    }
    case BoundFormula::half_eps:
      need_positive(p.sigma >= 1 && p.k >= 1 && p.n >= 1 && p.c > 0);
      return 2.0 * p.sigma + p.c * p.k * clog2(p.n);
  }
  throw std::invalid_argument("predict_bound: unknown formula");
}

inline SeedRun run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                            EventLog* log = nullptr) {
  SeedRun run;
  run.seed = seed;
  // Decorrelate the source's coin stream from the protocol's.
  std::uint64_t source_seed = seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL;
  auto adversary = make_adversary(cfg, source_seed);
  Rng rng(seed);
  std::unique_ptr<Monitor> monitor = make_monitor(cfg, rng, run.ledger, log);
  run.realized = play(*adversary, *monitor, run.ledger, cfg.horizon, cfg.check_validity);
  run.epochs = monitor->epochs();

  run.plan_exact = opt_exact(run.realized, cfg.k);
  run.plan_eps = opt_greedy(run.realized, cfg.k, cfg.eps);
  if (cfg.eps_prime) run.plan_eps_prime = opt_greedy(run.realized, cfg.k, *cfg.eps_prime);

  for (Time t = 1; t <= run.realized.horizon(); ++t)
    run.sigma_observed = std::max(run.sigma_observed, sigma_at(run.realized.row(t), cfg.k, cfg.eps));

  std::int64_t messages = run.ledger.totals().messages();
  run.vs_exact = ratios_against(messages, run.plan_exact);
  run.vs_eps = ratios_against(messages, run.plan_eps);
  if (run.plan_eps_prime) run.vs_eps_prime = ratios_against(messages, *run.plan_eps_prime);
  return run;
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  RunReport rep;
  rep.config = cfg;
  auto started = std::chrono::steady_clock::now();
  for (std::uint64_t seed : cfg.seeds) rep.runs.push_back(run_one_seed(cfg, seed));

  double count = static_cast<double>(rep.runs.size());
  RatioPair prime_sum;
  for (const SeedRun& run : rep.runs) {
    rep.sigma_observed = std::max(rep.sigma_observed, run.sigma_observed);
    rep.mean_messages += static_cast<double>(run.ledger.totals().messages()) / count;
    rep.mean_vs_exact.vs_reconfig += run.vs_exact.vs_reconfig / count;
    rep.mean_vs_exact.vs_detailed += run.vs_exact.vs_detailed / count;
    rep.mean_vs_eps.vs_reconfig += run.vs_eps.vs_reconfig / count;
    rep.mean_vs_eps.vs_detailed += run.vs_eps.vs_detailed / count;
    if (run.vs_eps_prime) {
      prime_sum.vs_reconfig += run.vs_eps_prime->vs_reconfig / count;
      prime_sum.vs_detailed += run.vs_eps_prime->vs_detailed / count;
    }
  }
  if (cfg.eps_prime) rep.mean_vs_eps_prime = prime_sum;

  BoundParams p;
  p.n = cfg.n;
  p.k = cfg.k;
  p.sigma = std::max(1, rep.sigma_observed);
  p.delta = static_cast<double>(cfg.delta);
  p.eps = cfg.eps;
  p.eps_vk = std::max(1.0, cfg.eps.to_double() * static_cast<double>(cfg.delta));
  p.c = cfg.calibration;
  rep.predicted_bounds["existence"] = predict_bound(BoundFormula::existence, p);
  rep.predicted_bounds["midpoint"] = predict_bound(BoundFormula::midpoint, p);
  rep.predicted_bounds["scattered"] = predict_bound(BoundFormula::scattered, p);
  rep.predicted_bounds["dense"] = predict_bound(BoundFormula::dense, p);
  rep.predicted_bounds["half_eps"] = predict_bound(BoundFormula::half_eps, p);

  rep.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

// Report serialization. Everything under "results" is a pure function of
// config plus seeds; the wall clock sits outside it so reruns byte-match
// where it matters.

inline Json config_json(const ExperimentConfig& cfg) {
  Json adv;
  adv["kind"] = to_string(cfg.adversary.kind);
  switch (cfg.adversary.kind) {
    case AdversaryKind::random_walk:
      adv["step"] = cfg.adversary.gen.step;
      break;
    case AdversaryKind::iid_uniform:
    case AdversaryKind::crossing:
      break;
    case AdversaryKind::oscillator:
      adv["pinned_high"] = cfg.adversary.gen.pinned_high;
      adv["oscillating"] = cfg.adversary.gen.oscillating;
      adv["center"] = cfg.adversary.gen.center;
      adv["amplitude"] = cfg.adversary.gen.amplitude;
      adv["high_value"] = cfg.adversary.gen.high_value;
      adv["low_value"] = cfg.adversary.gen.low_value;
      break;
    case AdversaryKind::lower_bound:
      adv["y0"] = cfg.adversary.y0;
      adv["phases"] = cfg.adversary.phases;
      adv["sigma"] = cfg.adversary.sigma;
      break;
    case AdversaryKind::replay:
      adv["rows"] = cfg.adversary.replay ? cfg.adversary.replay->horizon() : 0;
      break;
  }
  Json j;
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["eps"] = cfg.eps.str();
  j["eps_prime"] = cfg.eps_prime ? Json(cfg.eps_prime->str()) : Json(nullptr);
  j["delta"] = cfg.delta;
  j["horizon"] = cfg.horizon;
  j["protocol"] = to_string(cfg.protocol);
  j["adversary"] = std::move(adv);
  j["seeds"] = cfg.seeds;
  j["calibration"] = cfg.calibration;
  return j;
}

inline Json ratio_json(const RatioPair& r) {
  Json j;
  j["vs_reconfig"] = r.vs_reconfig;
  j["vs_detailed"] = r.vs_detailed;
  return j;
}

inline Json plan_summary_json(const OptSchedule& plan) {
  Json j;
  j["segments"] = plan.segments.size();
  j["reconfig_events"] = plan.reconfig_events;
  j["detailed_cost"] = plan.detailed_cost;
  j["forced_updates"] = plan.forced_updates();
  return j;
}

inline Json seed_run_json(const SeedRun& run) {
  Json j;
  j["seed"] = run.seed;
  j["messages"] = run.ledger.totals().messages();
  j["totals"] = totals_json(run.ledger.totals());
  j["sigma"] = run.sigma_observed;
  Json epochs = Json::array();
  for (const EpochRecord& rec : run.epochs) epochs.push_back(epoch_json(rec));
  j["epochs"] = std::move(epochs);
  Json plans;
  plans["exact"] = plan_summary_json(run.plan_exact);
  plans["eps"] = plan_summary_json(run.plan_eps);
  if (run.plan_eps_prime) plans["eps_prime"] = plan_summary_json(*run.plan_eps_prime);
  j["plans"] = std::move(plans);
  Json ratios;
  ratios["vs_exact"] = ratio_json(run.vs_exact);
  ratios["vs_eps"] = ratio_json(run.vs_eps);
  if (run.vs_eps_prime) ratios["vs_eps_prime"] = ratio_json(*run.vs_eps_prime);
  j["ratios"] = std::move(ratios);
  return j;
}

inline Json report_json(const RunReport& rep) {
  Json results;
  results["sigma_observed"] = rep.sigma_observed;
  results["mean_messages"] = rep.mean_messages;
  Json means;
  means["vs_exact"] = ratio_json(rep.mean_vs_exact);
  means["vs_eps"] = ratio_json(rep.mean_vs_eps);
  if (rep.mean_vs_eps_prime) means["vs_eps_prime"] = ratio_json(*rep.mean_vs_eps_prime);
  results["mean_ratios"] = std::move(means);
  results["predicted_bounds"] = rep.predicted_bounds;
  Json per_seed = Json::array();
  for (const SeedRun& run : rep.runs) per_seed.push_back(seed_run_json(run));
  results["per_seed"] = std::move(per_seed);

  Json j;
  j["config"] = config_json(rep.config);
  j["results"] = std::move(results);
  j["wall_clock_sec"] = rep.wall_clock_sec;
  return j;
}

/// One line per seed, headed, for quick spreadsheet triage.
inline std::string summary_csv(const RunReport& rep) {
  std::string out =
      "seed,messages,uplink,downlink_unicast,broadcast,sigma,"
      "exact_segments,eps_segments,ratio_vs_eps_reconfig,ratio_vs_eps_detailed\n";
  for (const SeedRun& run : rep.runs) {
    CostTotals c = run.ledger.totals();
    out += std::to_string(run.seed) + ',' + std::to_string(c.messages()) + ',' +
           std::to_string(c.uplink) + ',' + std::to_string(c.downlink_unicast) + ',' +
           std::to_string(c.broadcast) + ',' + std::to_string(run.sigma_observed) + ',' +
           std::to_string(run.plan_exact.segments.size()) + ',' +
           std::to_string(run.plan_eps.segments.size()) + ',' +
           std::to_string(run.vs_eps.vs_reconfig) + ',' +
           std::to_string(run.vs_eps.vs_detailed) + '\n';
  }
  return out;
}

}  // namespace topkmon
