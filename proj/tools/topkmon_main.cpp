#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "topkmon/harness.hpp"

namespace {

using namespace topkmon;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (item.empty()) continue;
    auto dash = item.find('-');
    std::uint64_t from = 0, to = 0;
    try {
      if (dash == std::string::npos) {
        from = to = std::stoull(item);
      } else {
        from = std::stoull(item.substr(0, dash));
        to = std::stoull(item.substr(dash + 1));
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("bad seed list entry '" + item + "'");
    }
    if (to < from || to - from > 10'000'000)
      throw std::invalid_argument("bad seed range '" + item + "'");
    for (std::uint64_t s = from; s <= to; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw std::invalid_argument("empty seed list");
  return seeds;
}

bool has_suffix(const std::string& name, const std::string& suffix) {
  return name.size() >= suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  return has_suffix(path, ".csv") ? read_trace_csv(in) : read_trace_jsonl(in);
}

void save_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  if (has_suffix(path, ".csv"))
    write_trace_csv(out, trace);
  else
    write_trace_jsonl(out, trace);
}

void write_report(const std::string& path, const Json& report) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file '" + path + "'");
  out << report.dump(2) << '\n';
}

/// Every option any subcommand understands; each subcommand registers the
/// subset it accepts.
struct CliOptions {
  int n = 0;
  int k = 0;
  std::string eps = "1/2";
  std::string eps_prime;
  Value delta = 0;
  std::int64_t horizon = 0;
  std::string protocol = "eps_topk";
  std::string adversary = "iid_uniform";
  std::string seeds = "1";
  std::uint64_t seed = 1;
  std::string out;
  std::string trace_file;
  std::string events_file;
  std::string dump_trace;
  double calibration = 1.0;
  bool no_check = false;
  // random walk
  Value step = 0;
  // oscillator
  int pinned_high = 0;
  int oscillating = 0;
  Value center = 0;
  Value amplitude = 0;
  Value high_value = 0;
  Value low_value = 0;
  // squeeze scenario
  Value y0 = 0;
  int phases = 1;
  int sigma = -1;
};

ExperimentConfig to_config(const CliOptions& o, std::vector<std::uint64_t> seeds) {
  ExperimentConfig cfg;
  cfg.n = o.n;
  cfg.k = o.k;
  cfg.eps = Rat::parse(o.eps);
  if (!o.eps_prime.empty()) cfg.eps_prime = Rat::parse(o.eps_prime);
  cfg.delta = o.delta;
  cfg.horizon = o.horizon;
  cfg.protocol = protocol_kind_from(o.protocol);
  cfg.adversary.kind = adversary_kind_from(o.adversary);
  cfg.adversary.gen.step = o.step;
  cfg.adversary.gen.pinned_high = o.pinned_high;
  cfg.adversary.gen.oscillating = o.oscillating;
  cfg.adversary.gen.center = o.center;
  cfg.adversary.gen.amplitude = o.amplitude;
  cfg.adversary.gen.high_value = o.high_value;
  cfg.adversary.gen.low_value = o.low_value;
  cfg.adversary.y0 = o.y0;
  cfg.adversary.phases = o.phases;
  cfg.adversary.sigma = o.sigma;
  if (cfg.adversary.kind == AdversaryKind::replay) {
    if (o.trace_file.empty())
      throw std::invalid_argument("replay needs --trace with the rows to feed back");
    cfg.adversary.replay = load_trace(o.trace_file);
    if (cfg.horizon == 0) cfg.horizon = cfg.adversary.replay->horizon();
  }
  cfg.seeds = std::move(seeds);
  cfg.calibration = o.calibration;
  cfg.check_validity = !o.no_check;
  if (cfg.eps > Rat(1, 2))
    std::cerr << "warning: eps above 1/2 stretches the slack band past a factor of two;"
              << " the shipped bounds are calibrated for eps <= 1/2\n";
  return cfg;
}

void add_model_options(CLI::App* sub, CliOptions& o, bool horizon_required) {
  sub->add_option("--n", o.n, "number of nodes")->required();
  sub->add_option("--k", o.k, "size of the reported top set")->required();
  sub->add_option("--eps", o.eps, "slack as a rational, e.g. 1/4 (default 1/2)");
  sub->add_option("--eps-prime", o.eps_prime, "tighter slack for the third oracle, <= eps/2");
  sub->add_option("--delta", o.delta, "largest value a node may take")->required();
  auto* hz = sub->add_option("--horizon", o.horizon, "number of steps to run");
  if (horizon_required) hz->required();
  sub->add_option("--protocol", o.protocol,
                  "midpoint|eps_topk|half_eps; scattered and dense dispatch through eps_topk");
  sub->add_option("--calibration", o.calibration, "bound calibration constant C");
  sub->add_flag("--no-check", o.no_check, "skip the per-step validity checks");
  sub->add_option("--out", o.out, "write the JSON report to this file");
}

void add_adversary_options(CLI::App* sub, CliOptions& o) {
  sub->add_option("--adversary", o.adversary,
                  "random_walk|iid_uniform|oscillator|crossing|lower_bound|replay");
  sub->add_option("--step", o.step, "random_walk: per-step move bound");
  sub->add_option("--pinned-high", o.pinned_high, "oscillator: nodes pinned at the top");
  sub->add_option("--oscillating", o.oscillating, "oscillator: nodes jittering in the band");
  sub->add_option("--center", o.center, "oscillator: jitter center");
  sub->add_option("--amplitude", o.amplitude, "oscillator: jitter half-width");
  sub->add_option("--high-value", o.high_value, "oscillator: pinned top value, 0 for delta");
  sub->add_option("--low-value", o.low_value, "oscillator: parked bottom value");
  sub->add_option("--y0", o.y0, "lower_bound: crowd level");
  sub->add_option("--phases", o.phases, "lower_bound: squeeze repetitions");
  sub->add_option("--sigma", o.sigma, "lower_bound: crowd width, -1 for all of n");
  sub->add_option("--trace", o.trace_file, "replay: rows to feed back (.jsonl or .csv)");
}

void run_simulate(const CliOptions& o) {
  ExperimentConfig cfg = to_config(o, {o.seed});
  validate(cfg);
  EventLog log;
  SeedRun run = run_one_seed(cfg, o.seed, o.events_file.empty() ? nullptr : &log);

  if (!o.events_file.empty()) {
    std::ofstream out(o.events_file);
    if (!out) throw std::runtime_error("cannot write events file '" + o.events_file + "'");
    write_events(out, log);
  }
  if (!o.dump_trace.empty()) save_trace(o.dump_trace, run.realized);

  Json report;
  report["config"] = config_json(cfg);
  report["seed"] = run.seed;
  report["sigma"] = run.sigma_observed;
  Json plans;
  plans["exact"] = plan_summary_json(run.plan_exact);
  plans["eps"] = plan_summary_json(run.plan_eps);
  if (run.plan_eps_prime) plans["eps_prime"] = plan_summary_json(*run.plan_eps_prime);
  report["plans"] = std::move(plans);
  Json epochs = Json::array();
  for (const EpochRecord& rec : run.epochs) epochs.push_back(epoch_json(rec));
  report["epochs"] = std::move(epochs);
  report["ledger"] = ledger_json(run.ledger);
  write_report(o.out, report);

  std::cout << "t,uplink,downlink_unicast,broadcast,rounds\n";
  for (const auto& [t, c] : run.ledger.per_step())
    std::cout << t << ',' << c.uplink << ',' << c.downlink_unicast << ',' << c.broadcast
              << ',' << c.rounds << '\n';
}

void run_opt(const CliOptions& o) {
  Trace trace = load_trace(o.trace_file);
  Rat eps = Rat::parse(o.eps);
  OptSchedule exact = opt_exact(trace, o.k);
  OptSchedule loose = opt_greedy(trace, o.k, eps);
  std::optional<OptSchedule> tight;
  if (!o.eps_prime.empty()) tight = opt_greedy(trace, o.k, Rat::parse(o.eps_prime));

  Json report;
  report["rows"] = trace.horizon();
  report["n"] = trace.n_nodes();
  report["k"] = o.k;
  report["eps"] = eps.str();
  report["exact"] = schedule_json(exact);
  report["eps_plan"] = schedule_json(loose);
  if (tight) {
    report["eps_prime"] = Rat::parse(o.eps_prime).str();
    report["eps_prime_plan"] = schedule_json(*tight);
  }
  write_report(o.out, report);

  std::cout << "oracle,segments,reconfig_events,detailed_cost,forced_updates\n";
  auto line = [](const std::string& name, const OptSchedule& plan) {
    std::cout << name << ',' << plan.segments.size() << ',' << plan.reconfig_events << ','
              << plan.detailed_cost << ',' << plan.forced_updates() << '\n';
  };
  line("exact", exact);
  line("eps", loose);
  if (tight) line("eps_prime", *tight);
}

void run_ratio(const CliOptions& o) {
  ExperimentConfig cfg = to_config(o, parse_seeds(o.seeds));
  RunReport rep = run_experiment(cfg);
  write_report(o.out, report_json(rep));
  std::cout << summary_csv(rep);
}

void run_lowerbound(CliOptions o) {
  o.adversary = "lower_bound";
  if (o.horizon == 0) {
    int width = o.sigma < 0 ? o.n : o.sigma;
    o.horizon = 2 + static_cast<std::int64_t>(o.phases) * (width - o.k + 1);
  }
  run_ratio(o);
}

void run_gen(const CliOptions& o) {
  GenKind kind;
  AdversaryKind selected = adversary_kind_from(o.adversary);
  switch (selected) {
    case AdversaryKind::random_walk: kind = GenKind::random_walk; break;
    case AdversaryKind::iid_uniform: kind = GenKind::iid_uniform; break;
    case AdversaryKind::oscillator: kind = GenKind::oscillator; break;
    default:
      throw std::invalid_argument("gen emits fixed traces, so it needs a stochastic source");
  }
  GenParams params;
  params.n = o.n;
  params.delta = o.delta;
  params.step = o.step;
  params.pinned_high = o.pinned_high;
  params.oscillating = o.oscillating;
  params.center = o.center;
  params.amplitude = o.amplitude;
  params.high_value = o.high_value;
  params.low_value = o.low_value;
  auto source = stochastic_generator(kind, params, o.seed);

  const std::vector<Filter> blank(static_cast<std::size_t>(o.n), Filter::everything());
  Trace trace(o.n);
  for (Time t = 1; t <= o.horizon; ++t)
    trace.append(source->next_values(ServerView{t, blank, {}, "gen"}));

  if (o.out.empty())
    write_trace_jsonl(std::cout, trace);
  else
    save_trace(o.out, trace);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filter-based top-k monitoring workbench"};
  app.require_subcommand(1);
  CliOptions o;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "run one protocol against one value source and dump its ledger");
  add_model_options(simulate, o, true);
  add_adversary_options(simulate, o);
  simulate->add_option("--seed", o.seed, "seed for this single run");
  simulate->add_option("--events", o.events_file, "write the event log here, one JSON per line");
  simulate->add_option("--dump-trace", o.dump_trace, "save the realized rows (.jsonl or .csv)");
  simulate->callback([&] { run_simulate(o); });

  CLI::App* opt = app.add_subcommand("opt", "offline oracle schedules for a recorded trace");
  opt->add_option("--trace", o.trace_file, "trace to plan (.jsonl or .csv)")->required();
  opt->add_option("--k", o.k, "size of the reported top set")->required();
  opt->add_option("--eps", o.eps, "slack as a rational (default 1/2)");
  opt->add_option("--eps-prime", o.eps_prime, "also plan at this tighter slack");
  opt->add_option("--out", o.out, "write the JSON report to this file");
  opt->callback([&] { run_opt(o); });

  CLI::App* ratio = app.add_subcommand(
      "ratio", "run a seed grid and report empirical competitive ratios");
  add_model_options(ratio, o, true);
  add_adversary_options(ratio, o);
  ratio->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,9-16");
  ratio->callback([&] { run_ratio(o); });

  CLI::App* lower = app.add_subcommand(
      "lowerbound", "run the guarded-drop squeeze scenario against a protocol");
  add_model_options(lower, o, false);
  lower->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,9-16");
  lower->add_option("--y0", o.y0, "crowd level")->required();
  lower->add_option("--phases", o.phases, "squeeze repetitions");
  lower->add_option("--sigma", o.sigma, "crowd width, -1 for all of n");
  lower->callback([&] { run_lowerbound(o); });

  CLI::App* gen = app.add_subcommand("gen", "emit a stochastic trace without running a protocol");
  gen->add_option("--n", o.n, "number of nodes")->required();
  gen->add_option("--delta", o.delta, "largest value a node may take")->required();
  gen->add_option("--horizon", o.horizon, "number of rows")->required();
  gen->add_option("--adversary", o.adversary, "random_walk|iid_uniform|oscillator");
  gen->add_option("--seed", o.seed, "generator seed");
  gen->add_option("--step", o.step, "random_walk: per-step move bound");
  gen->add_option("--pinned-high", o.pinned_high, "oscillator: nodes pinned at the top");
  gen->add_option("--oscillating", o.oscillating, "oscillator: nodes jittering in the band");
  gen->add_option("--center", o.center, "oscillator: jitter center");
  gen->add_option("--amplitude", o.amplitude, "oscillator: jitter half-width");
  gen->add_option("--high-value", o.high_value, "oscillator: pinned top value, 0 for delta");
  gen->add_option("--low-value", o.low_value, "oscillator: parked bottom value");
  gen->add_option("--out", o.out, "trace file to write (.jsonl or .csv), stdout when absent");
  gen->callback([&] { run_gen(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
