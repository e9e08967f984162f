#pragma once

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"
#include "topkmon/offline.hpp"
#include "topkmon/protocols/events.hpp"
#include "topkmon/protocols/protocol.hpp"
#include "topkmon/rational.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// All emitted JSON keeps insertion order so that identical runs dump
/// identical bytes.
using Json = nlohmann::ordered_json;

// Rationals travel as "p/q" strings (bare "p" when the denominator is 1).

inline Json filter_json(const Filter& f) {
  Json j;
  j["lo"] = f.lo.str();
  j["hi"] = f.hi ? Json(f.hi->str()) : Json(nullptr);
  return j;
}

inline Filter filter_from_json(const Json& j) {
  Rat lo = Rat::parse(j.at("lo").get<std::string>());
  if (j.at("hi").is_null()) return Filter::at_least(lo);
  return Filter::between(lo, Rat::parse(j.at("hi").get<std::string>()));
}

inline Json totals_json(const CostTotals& c) {
  Json j;
  j["uplink"] = c.uplink;
  j["downlink_unicast"] = c.downlink_unicast;
  j["broadcast"] = c.broadcast;
  j["rounds"] = c.rounds;
  return j;
}

inline Json ledger_json(const CostLedger& ledger) {
  Json j = totals_json(ledger.totals());
  Json steps = Json::array();
  for (const auto& [t, c] : ledger.per_step()) {
    Json s;
    s["t"] = t;
    s["uplink"] = c.uplink;
    s["downlink_unicast"] = c.downlink_unicast;
    s["broadcast"] = c.broadcast;
    s["rounds"] = c.rounds;
    steps.push_back(std::move(s));
  }
  j["per_step"] = std::move(steps);
  return j;
}

inline Json schedule_json(const OptSchedule& plan) {
  Json segs = Json::array();
  for (const OptSegment& s : plan.segments) {
    Json j;
    j["t_from"] = s.t_from;
    j["t_to"] = s.t_to;
    j["output"] = s.output;
    j["inside"] = filter_json(s.inside);
    j["outside"] = filter_json(s.outside);
    segs.push_back(std::move(j));
  }
  Json j;
  j["segments"] = std::move(segs);
  j["reconfig_events"] = plan.reconfig_events;
  j["detailed_cost"] = plan.detailed_cost;
  j["forced_updates"] = plan.forced_updates();
  return j;
}

inline Json epoch_json(const EpochRecord& rec) {
  Json j;
  j["kind"] = to_string(rec.kind);
  j["t_start"] = rec.t_start;
  j["t_end"] = rec.t_end;
  j["reason"] = to_string(rec.reason);
  j["cost"] = totals_json(rec.cost());
  if (rec.dense) {
    Json d;
    d["z"] = rec.dense->z;
    d["l0_count"] = rec.dense->l0_count;
    d["rounds"] = rec.dense->rounds;
    d["sub_calls"] = rec.dense->sub_calls;
    Json outs = Json::array();
    for (SubOutcomeKind o : rec.dense->sub_outcomes) outs.push_back(to_string(o));
    d["sub_outcomes"] = std::move(outs);
    j["dense"] = std::move(d);
  }
  return j;
}

/// One compact JSON object per action; zero node and empty detail are
/// dropped rather than printed.
inline std::string event_line(const Event& e) {
  Json j;
  j["t"] = e.t;
  j["event"] = e.kind;
  if (e.node != 0) j["node"] = e.node;
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j.dump();
}

inline void write_events(std::ostream& out, const EventLog& log) {
  for (const Event& e : log) out << event_line(e) << '\n';
}

// Trace files: one {"t": ..., "values": [...]} object per line, or CSV
// with a `t,v1,...,vn` header. Readers insist on a fixed row width and
// on steps numbered 1,2,... in order.

inline void write_trace_jsonl(std::ostream& out, const Trace& trace) {
  for (Time t = 1; t <= trace.horizon(); ++t) {
    Json j;
    j["t"] = t;
    j["values"] = trace.row(t);
    out << j.dump() << '\n';
  }
}

inline Trace read_trace_jsonl(std::istream& in) {
  std::optional<Trace> trace;
  std::string line;
  Time expect = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    if (j.at("t").get<Time>() != expect)
      throw std::invalid_argument("trace: steps must be numbered 1,2,... in order");
    const Json& vals = j.at("values");
    if (!vals.is_array()) throw std::invalid_argument("trace: values must be an array");
    std::vector<Value> row;
    row.reserve(vals.size());
    for (const Json& v : vals) {
      if (!v.is_number_unsigned())
        throw std::invalid_argument("trace: values must be nonnegative integers");
      row.push_back(v.get<Value>());
    }
    if (!trace) trace.emplace(static_cast<int>(row.size()));
    if (static_cast<int>(row.size()) != trace->n_nodes())
      throw std::invalid_argument("trace: row width changed mid-file");
    trace->append(row);
    ++expect;
  }
  if (!trace) throw std::invalid_argument("trace: no rows");
  return *std::move(trace);
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << 't';
  for (int i = 1; i <= trace.n_nodes(); ++i) out << ",v" << i;
  out << '\n';
  for (Time t = 1; t <= trace.horizon(); ++t) {
    out << t;
    for (Value v : trace.row(t)) out << ',' << v;
    out << '\n';
  }
}

inline Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
    throw std::invalid_argument("trace: missing t,v1,... header");
  int n = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (n < 1) throw std::invalid_argument("trace: header names no nodes");
  Trace trace(n);
  Time expect = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<Value> row;
    bool first = true;
    while (std::getline(fields, cell, ',')) {
      std::size_t used = 0;
      unsigned long long parsed;
      try {
        parsed = std::stoull(cell, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("trace: bad number '" + cell + "'");
      }
      if (used != cell.size()) throw std::invalid_argument("trace: bad number '" + cell + "'");
      if (first) {
        if (static_cast<Time>(parsed) != expect)
          throw std::invalid_argument("trace: steps must be numbered 1,2,... in order");
        first = false;
      } else {
        row.push_back(static_cast<Value>(parsed));
      }
    }
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("trace: row width does not match the header");
    trace.append(row);
    ++expect;
  }
  return trace;
}

}  // namespace topkmon
