#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "topkmon/ledger.hpp"
#include "topkmon/model.hpp"
#include "topkmon/rng.hpp"
#include "topkmon/trace.hpp"

namespace topkmon {

/// Outcome of one existence poll. `senders` holds the ids that spoke in the
/// terminating round (empty when nobody held the token at all); `rounds` is
/// the number of probe rounds consumed, uplink equals senders.size().
struct ExistenceResult {
  std::vector<NodeId> senders;
  int rounds = 0;

  bool any() const { return !senders.empty(); }
  NodeId lowest() const { return senders.front(); }
};

inline int rounds_cap(std::uint64_t population) {
  // ceil(log2 population); a lone node resolves in its first round.
  return population <= 1 ? 0 : ceil_log2(population);
}

/// Randomized poll for "does any participant exist": in round r every
/// participant speaks with probability min(1, 2^r / population), and the
/// poll stops at the first round someone spoke. With nobody participating,
/// all rounds pass in silence. Expected uplink is a small constant
/// regardless of how many participants there are.
inline ExistenceResult existence_poll(const std::vector<NodeId>& participants,
                                      std::uint64_t population, Rng& rng,
                                      CostLedger& ledger) {
  ExistenceResult res;
  int gamma = rounds_cap(population);
  for (int r = 0; r <= gamma; ++r) {
    ++res.rounds;
    for (NodeId id : participants)
      if (rng.coin_pow2(r, population)) res.senders.push_back(id);
    if (!res.senders.empty()) break;
  }
  std::sort(res.senders.begin(), res.senders.end());
  ledger.count_rounds(res.rounds);
  ledger.count_uplink(static_cast<std::int64_t>(res.senders.size()));
  return res;
}

/// Decides the disjunction over per-node bits. Always correct; only the
/// message count is random.
inline bool existence_protocol(const std::vector<bool>& bits, Rng& rng,
                               CostLedger& ledger) {
  std::vector<NodeId> holders;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) holders.push_back(static_cast<NodeId>(i + 1));
  return existence_poll(holders, bits.size(), rng, ledger).any();
}

/// Server broadcasts a value band; every node currently inside it replies
/// with one message. Used to learn the undecided middle group in one round
/// at a cost linear in its size. Returns the responders in id order.
inline std::vector<NodeId> band_announce(const std::vector<Value>& values,
                                         const Rat& lo, const Rat& hi,
                                         CostLedger& ledger) {
  ledger.count_broadcast();
  ledger.count_rounds(1);
  std::vector<NodeId> inside;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (lo <= values[i] && values[i] <= hi)
      inside.push_back(static_cast<NodeId>(i + 1));
  ledger.count_uplink(static_cast<std::int64_t>(inside.size()));
  return inside;
}

/// One violation-reporting exchange: nodes outside their filters compete in
/// an existence poll; everyone who speaks in the terminating round uploads
/// (id, side, value) and the server takes the lowest id first.
struct ViolationReport {
  std::vector<Violation> senders;  // ascending id
  int rounds = 0;

  bool any() const { return !senders.empty(); }
  const Violation& first() const { return senders.front(); }
};

inline ViolationReport report_violations(const std::vector<Filter>& filters,
                                         const std::vector<Value>& values, Rng& rng,
                                         CostLedger& ledger) {
  std::vector<Violation> violating = detect_violations(filters, values);
  std::vector<NodeId> ids;
  ids.reserve(violating.size());
  for (const auto& v : violating) ids.push_back(v.id);
  ExistenceResult poll = existence_poll(ids, values.size(), rng, ledger);
  ViolationReport rep;
  rep.rounds = poll.rounds;
  for (NodeId id : poll.senders)
    for (const auto& v : violating)
      if (v.id == id) rep.senders.push_back(v);
  return rep;
}

/// Maximum among `candidates` by repeated champion challenges: the server
/// broadcasts the current champion, nodes that outrank it answer an
/// existence poll, and the lowest-id sender of the terminating round becomes
/// the next champion. A silent poll means the champion is the true maximum.
/// Ties go to the smaller id.
struct FindMaxResult {
  NodeId winner = 0;
  Value value = 0;
  int challenges = 0;  // broadcasts spent, including the final silent one
};

inline FindMaxResult find_max(const std::vector<Value>& values,
                              const std::vector<NodeId>& candidates, Rng& rng,
                              CostLedger& ledger) {
  if (candidates.empty()) throw std::invalid_argument("find_max: no candidates");
  std::optional<std::pair<Value, NodeId>> champion;
  FindMaxResult res;
  for (;;) {
    ledger.count_broadcast();
    ++res.challenges;
    std::vector<NodeId> exceeders;
    for (NodeId id : candidates) {
      Value v = values[static_cast<std::size_t>(id - 1)];
      if (!champion || outranks(v, id, champion->first, champion->second))
        exceeders.push_back(id);
    }
    ExistenceResult poll =
        existence_poll(exceeders, candidates.size(), rng, ledger);
    if (!poll.any()) break;
    // Every sender already outranks the old champion, so promoting the one
    // with the lowest id still makes strict progress each challenge.
    NodeId id = poll.lowest();
    champion = {values[static_cast<std::size_t>(id - 1)], id};
  }
  res.winner = champion->second;
  res.value = champion->first;
  return res;
}

/// Ranks the k+1 best nodes by running the champion protocol k+1 times,
/// dropping each winner from the next run. Returned in rank order. Dropping
/// a winner rides on the next challenge broadcast, so no extra
/// coordination messages appear here.
inline std::vector<std::pair<NodeId, Value>> top_k_plus_one(
    const std::vector<Value>& values, int k, Rng& rng, CostLedger& ledger) {
  if (k + 1 > static_cast<int>(values.size()))
    throw std::invalid_argument("top_k_plus_one: need at least k+1 nodes");
  std::vector<NodeId> candidates(values.size());
  std::iota(candidates.begin(), candidates.end(), 1);
  std::vector<std::pair<NodeId, Value>> ranked;
  for (int round = 0; round < k + 1; ++round) {
    FindMaxResult best = find_max(values, candidates, rng, ledger);
    ranked.emplace_back(best.winner, best.value);
    candidates.erase(std::find(candidates.begin(), candidates.end(), best.winner));
  }
  return ranked;
}

}  // namespace topkmon
