#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssmm/protocol.hpp"

namespace ssmm {

// Byzantine behavior is restricted to the declared variable domains: neighbors
// only ever read pref (and never a neighbor's prev_pref), so out-of-domain
// values would add no adversarial power.
enum class StrategyKind { Silent, RandomWrites, OscillatingDivorce, Scripted };

inline std::string_view strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Silent: return "silent";
    case StrategyKind::RandomWrites: return "random";
    case StrategyKind::OscillatingDivorce: return "oscillate";
    case StrategyKind::Scripted: return "scripted";
  }
  return "?";
}

struct Strategy {
  StrategyKind kind = StrategyKind::Silent;
  std::uint64_t seed = 0;                         // random
  std::uint32_t period = 1;                       // oscillate
  std::optional<NodeId> target;                   // oscillate (default: first neighbor)
  std::map<std::uint64_t, ProcessorState> script; // scripted: step -> state
};

struct FaultModel {
  std::vector<NodeId> byzantine;           // sorted, unique
  std::map<NodeId, Strategy> strategies;   // one entry per byzantine node

  bool is_byzantine(NodeId v) const {
    return std::binary_search(byzantine.begin(), byzantine.end(), v);
  }

  // A Silent Byzantine behaves exactly as a correct node: it keeps running
  // the protocol and never writes adversarially, so an all-Silent fault model
  // executes exactly like a fault-free system.
  bool active() const {
    for (const auto& [node, s] : strategies)
      if (s.kind != StrategyKind::Silent) return true;
    return false;
  }

  // Nodes under adversary control: byzantine nodes with a non-Silent
  // strategy. These are the nodes the daemon never schedules.
  std::vector<NodeId> acting_byzantine() const {
    std::vector<NodeId> out;
    for (NodeId b : byzantine) {
      auto it = strategies.find(b);
      if (it != strategies.end() && it->second.kind != StrategyKind::Silent)
        out.push_back(b);
    }
    return out;
  }
};

inline void validate_fault_model(const Topology& topo, const FaultModel& fm) {
  if (!std::is_sorted(fm.byzantine.begin(), fm.byzantine.end()) ||
      std::adjacent_find(fm.byzantine.begin(), fm.byzantine.end()) != fm.byzantine.end())
    throw UsageError("byzantine node list must be sorted and duplicate-free");
  for (NodeId b : fm.byzantine)
    if (b >= topo.size())
      throw UsageError("byzantine node " + std::to_string(b) + " is not in the topology");
  for (const auto& [node, s] : fm.strategies) {
    if (!fm.is_byzantine(node))
      throw UsageError("strategy given for non-byzantine node " + std::to_string(node));
    if (s.kind == StrategyKind::OscillatingDivorce) {
      if (s.period == 0) throw UsageError("oscillate period must be >= 1");
      if (s.target && !topo.has_edge(node, *s.target))
        throw UsageError("oscillate target " + std::to_string(*s.target) +
                         " is not a neighbor of node " + std::to_string(node));
    }
    if (s.kind == StrategyKind::Scripted) {
      for (const auto& [step, state] : s.script)
        if (!state_well_formed(topo, node, state))
          throw UsageError("scripted state for node " + std::to_string(node) + " at step " +
                           std::to_string(step) + " is outside the variable domain");
    }
  }
  for (NodeId b : fm.byzantine)
    if (!fm.strategies.count(b))
      throw UsageError("byzantine node " + std::to_string(b) + " has no strategy");
}

// The writes all byzantine nodes perform at `step`, computed from the
// start-of-step configuration. Sorted by node id; deterministic given
// (strategy seed, step).
inline std::vector<std::pair<NodeId, ProcessorState>> byzantine_writes(
    const FaultModel& fm, const Topology& topo, const Configuration& cfg,
    std::uint64_t step) {
  std::vector<std::pair<NodeId, ProcessorState>> writes;
  for (NodeId b : fm.byzantine) {
    const Strategy& s = fm.strategies.at(b);
    switch (s.kind) {
      case StrategyKind::Silent:
        break;
      case StrategyKind::RandomWrites: {
        Rng rng(hash_combine(hash_combine(s.seed, step), b));
        const auto& nbrs = topo.neighbors(b);
        ProcessorState w;
        std::uint64_t pick = rng.below(nbrs.size() + 1);
        if (pick < nbrs.size()) w.pref = nbrs[pick];
        w.prev_pref = nbrs[rng.below(nbrs.size())];
        writes.emplace_back(b, w);
        break;
      }
      case StrategyKind::OscillatingDivorce: {
        NodeId target = s.target ? *s.target : topo.neighbors(b)[0];
        ProcessorState w;
        w.prev_pref = target;
        if ((step / s.period) % 2 == 0) w.pref = target;
        writes.emplace_back(b, w);
        break;
      }
      case StrategyKind::Scripted: {
        auto it = s.script.find(step);
        if (it != s.script.end()) writes.emplace_back(b, it->second);
        break;
      }
    }
  }
  (void)cfg;
  return writes;
}

// Bundled radius-optimality scenario on the 3-node path b - v - u: b and v
// start married, u is dead, so every node is locally legitimate; b then
// breaks the marriage at step 0, turning u (at distance 2 from b) single.
struct CounterexampleScenario {
  Configuration initial;
  FaultModel faults;
  NodeId byz;     // b: the byzantine endpoint
  NodeId middle;  // v: b's correct neighbor
  NodeId far;     // u: the distance-2 endpoint
};

inline CounterexampleScenario counterexample_script(const Topology& topo) {
  if (topo.size() != 3)
    throw UsageError("counterexample scenario needs the 3-node path");
  NodeId b = 3, v = 3, u = 3;
  for (NodeId w = 0; w < 3; ++w) {
    if (topo.degree(w) == 2)
      v = w;
    else if (b == 3)
      b = w;
    else
      u = w;
  }
  if (v == 3 || u == 3)
    throw UsageError("counterexample scenario needs the 3-node path");

  CounterexampleScenario sc;
  sc.byz = b;
  sc.middle = v;
  sc.far = u;
  sc.initial.resize(3);
  sc.initial[b] = {v, v};
  sc.initial[v] = {b, b};
  sc.initial[u] = {std::nullopt, v};
  sc.faults.byzantine = {b};
  Strategy s;
  s.kind = StrategyKind::Scripted;
  s.script[0] = ProcessorState{std::nullopt, v};
  sc.faults.strategies[b] = std::move(s);
  validate_fault_model(topo, sc.faults);
  return sc;
}

}  // namespace ssmm
