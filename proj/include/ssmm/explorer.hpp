#pragma once

#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include "ssmm/adversary.hpp"
#include "ssmm/scheduler.hpp"
#include "ssmm/verifier.hpp"

namespace ssmm {

// A configuration packed into one mixed-radix integer: per node, the digit is
// pref_index * degree + prev_index, where pref_index in [0, degree] (degree
// encodes null) and prev_index in [0, degree). Bijective with the well-formed
// configurations of the instance.
using StateKey = std::uint64_t;

inline std::uint64_t node_domain_size(const Topology& topo, NodeId v) {
  std::uint64_t d = topo.degree(v);
  return (d + 1) * d;
}

// Product of per-node domain sizes, saturating at uint64 max.
inline std::uint64_t state_count(const Topology& topo) {
  std::uint64_t total = 1;
  for (NodeId v = 0; v < topo.size(); ++v) {
    std::uint64_t r = node_domain_size(topo, v);
    if (total > std::numeric_limits<std::uint64_t>::max() / r)
      return std::numeric_limits<std::uint64_t>::max();
    total *= r;
  }
  return total;
}

inline StateKey encode_state(const Topology& topo, const Configuration& cfg) {
  StateKey key = 0;
  for (NodeId v = topo.size(); v-- > 0;) {
    const std::uint64_t deg = topo.degree(v);
    std::uint64_t pref_idx =
        cfg[v].pref ? topo.neighbor_index(v, *cfg[v].pref) : deg;
    std::uint64_t prev_idx = topo.neighbor_index(v, cfg[v].prev_pref);
    key = key * node_domain_size(topo, v) + (pref_idx * deg + prev_idx);
  }
  return key;
}

inline Configuration decode_state(const Topology& topo, StateKey key) {
  Configuration cfg(topo.size());
  for (NodeId v = 0; v < topo.size(); ++v) {
    const std::uint64_t deg = topo.degree(v);
    const std::uint64_t r = node_domain_size(topo, v);
    std::uint64_t digit = key % r;
    key /= r;
    std::uint64_t pref_idx = digit / deg;
    std::uint64_t prev_idx = digit % deg;
    if (pref_idx < deg) cfg[v].pref = topo.neighbors(v)[pref_idx];
    cfg[v].prev_pref = topo.neighbors(v)[prev_idx];
  }
  return cfg;
}

struct Transition {
  std::vector<EnabledNode> selection;
  std::vector<std::pair<NodeId, ProcessorState>> writes;
  StateKey to = 0;
};

struct TransitionGraph {
  Topology topo;
  std::vector<NodeId> byzantine;
  std::uint64_t num_states = 0;
  std::vector<std::vector<Transition>> transitions;  // indexed by StateKey
  std::vector<bool> contained1, contained2;
};

using RuleApplier =
    std::function<ProcessorState(const Topology&, const Configuration&, NodeId, Rule)>;

struct BuildOptions {
  std::uint64_t bound = 1u << 20;
  // Test hook: substitute a mutated rule application (defaults to apply_rule).
  RuleApplier apply;
};

// Full transition graph over every well-formed configuration: each legal
// daemon selection (every nonempty independent subset of the enabled correct
// nodes) combined with every in-domain write combination of the byzantine
// nodes. Self-stabilization makes every state a start state, so there is no
// reachability pruning.
inline TransitionGraph build(const Topology& topo, const std::vector<NodeId>& byzantine,
                             const BuildOptions& options = {}) {
  for (NodeId b : byzantine)
    if (b >= topo.size())
      throw UsageError("byzantine node " + std::to_string(b) + " is not in the topology");
  const std::uint64_t total = state_count(topo);
  if (total > options.bound)
    throw UsageError("state count " + std::to_string(total) + " exceeds bound " +
                     std::to_string(options.bound));
  RuleApplier apply = options.apply;
  if (!apply)
    apply = [](const Topology& t, const Configuration& c, NodeId v, Rule r) {
      return apply_rule(t, c, v, r);
    };

  TransitionGraph tg;
  tg.topo = topo;
  tg.byzantine = byzantine;
  tg.num_states = total;
  tg.transitions.resize(total);
  tg.contained1.resize(total);
  tg.contained2.resize(total);

  // Per-byzantine in-domain write option lists, fanned out as a cartesian
  // product. Writing the current values is one of the options, so "no write"
  // is subsumed.
  std::vector<std::vector<ProcessorState>> byz_options;
  for (NodeId b : byzantine) {
    std::vector<ProcessorState> opts;
    const auto& nbrs = topo.neighbors(b);
    for (std::size_t pi = 0; pi <= nbrs.size(); ++pi)
      for (std::size_t qi = 0; qi < nbrs.size(); ++qi) {
        ProcessorState s;
        if (pi < nbrs.size()) s.pref = nbrs[pi];
        s.prev_pref = nbrs[qi];
        opts.push_back(s);
      }
    byz_options.push_back(std::move(opts));
  }
  std::vector<std::vector<std::pair<NodeId, ProcessorState>>> write_combos;
  {
    std::vector<std::pair<NodeId, ProcessorState>> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == byzantine.size()) {
        write_combos.push_back(cur);
        return;
      }
      for (const auto& s : byz_options[i]) {
        cur.emplace_back(byzantine[i], s);
        rec(i + 1);
        cur.pop_back();
      }
    };
    rec(0);
  }

  for (StateKey key = 0; key < total; ++key) {
    Configuration cfg = decode_state(topo, key);
    tg.contained1[key] = is_c_contained(topo, cfg, byzantine, 1).contained;
    tg.contained2[key] = is_c_contained(topo, cfg, byzantine, 2).contained;

    std::vector<EnabledNode> enabled = enabled_nodes(topo, cfg, byzantine);
    std::vector<std::vector<EnabledNode>> selections;
    if (enabled.empty()) {
      if (!byzantine.empty()) selections.push_back({});
    } else {
      std::vector<NodeId> ids;
      for (const auto& e : enabled) ids.push_back(e.node);
      for (const auto& sel : all_selections(topo, ids)) {
        std::vector<EnabledNode> with_rules;
        for (NodeId v : sel)
          for (const auto& e : enabled)
            if (e.node == v) with_rules.push_back(e);
        selections.push_back(std::move(with_rules));
      }
    }

    // write_combos always holds at least the empty combination.
    for (const auto& sel : selections) {
      for (const auto& writes : write_combos) {
        Configuration next = cfg;
        for (const auto& e : sel) next[e.node] = apply(topo, cfg, e.node, e.rule);
        for (const auto& [b, s] : writes) next[b] = s;
        Transition t;
        t.selection = sel;
        t.writes = writes;
        t.to = encode_state(topo, next);
        tg.transitions[key].push_back(std::move(t));
      }
    }
  }
  return tg;
}

inline std::vector<bool> contained_flags(const TransitionGraph& tg, std::uint32_t c) {
  if (c == 1) return tg.contained1;
  if (c == 2) return tg.contained2;
  std::vector<bool> flags(tg.num_states);
  for (StateKey k = 0; k < tg.num_states; ++k)
    flags[k] =
        is_c_contained(tg.topo, decode_state(tg.topo, k), tg.byzantine, c).contained;
  return flags;
}

struct ClosureViolation {
  StateKey from = 0;
  std::size_t transition_index = 0;
  StateKey to = 0;
};

// Transitions that leave the c-contained set.
inline std::vector<ClosureViolation> check_closure(const TransitionGraph& tg,
                                                   std::uint32_t c) {
  auto contained = contained_flags(tg, c);
  std::vector<ClosureViolation> out;
  for (StateKey k = 0; k < tg.num_states; ++k) {
    if (!contained[k]) continue;
    for (std::size_t i = 0; i < tg.transitions[k].size(); ++i)
      if (!contained[tg.transitions[k][i].to]) out.push_back({k, i, tg.transitions[k][i].to});
  }
  return out;
}

namespace detail {

// Iterative Tarjan; returns the SCC id per state, ids numbered in reverse
// topological order of the condensation.
inline std::vector<std::uint32_t> tarjan_scc(const TransitionGraph& tg,
                                             std::uint32_t& scc_count) {
  const std::uint64_t n = tg.num_states;
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> index(n, kUnset), lowlink(n), scc_id(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<StateKey> stack;
  std::uint32_t next_index = 0;
  scc_count = 0;

  struct Frame {
    StateKey v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (StateKey root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (edge < tg.transitions[v].size()) {
        StateKey w = tg.transitions[v][edge].to;
        ++edge;
        if (index[w] == kUnset) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) lowlink[v] = std::min(lowlink[v], index[w]);
      }
      if (descended) continue;
      if (lowlink[v] == index[v]) {
        while (true) {
          StateKey w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc_id[w] = scc_count;
          if (w == v) break;
        }
        ++scc_count;
      }
      StateKey finished = v;
      call.pop_back();
      if (!call.empty())
        lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[finished]);
    }
  }
  return scc_id;
}

}  // namespace detail

struct ConvergenceVerdict {
  bool holds = false;
  std::uint32_t scc_count = 0;
  std::vector<std::vector<StateKey>> terminal_sccs;   // sinks of the condensation
  std::uint64_t bad_terminal_sccs = 0;                // sinks with no c-contained state
  std::uint64_t states_without_path_to_contained = 0;
};

// Structural necessary condition for convergence: every terminal SCC of the
// transition graph contains a c-contained state, and every state can reach
// one. Fairness-constrained liveness is deliberately out of scope; randomized
// campaigns supply the complementary empirical evidence.
inline ConvergenceVerdict check_convergence(const TransitionGraph& tg, std::uint32_t c) {
  ConvergenceVerdict verdict;
  auto contained = contained_flags(tg, c);

  std::uint32_t scc_count = 0;
  auto scc_id = detail::tarjan_scc(tg, scc_count);
  verdict.scc_count = scc_count;

  std::vector<bool> has_out_edge(scc_count, false);
  std::vector<bool> has_contained(scc_count, false);
  for (StateKey k = 0; k < tg.num_states; ++k) {
    if (contained[k]) has_contained[scc_id[k]] = true;
    for (const auto& t : tg.transitions[k])
      if (scc_id[t.to] != scc_id[k]) has_out_edge[scc_id[k]] = true;
  }
  std::vector<std::vector<StateKey>> members(scc_count);
  for (StateKey k = 0; k < tg.num_states; ++k) members[scc_id[k]].push_back(k);
  for (std::uint32_t s = 0; s < scc_count; ++s) {
    if (has_out_edge[s]) continue;
    verdict.terminal_sccs.push_back(members[s]);
    if (!has_contained[s]) ++verdict.bad_terminal_sccs;
  }

  // Backward reachability from the contained set.
  std::vector<std::vector<StateKey>> preds(tg.num_states);
  for (StateKey k = 0; k < tg.num_states; ++k)
    for (const auto& t : tg.transitions[k]) preds[t.to].push_back(k);
  std::vector<bool> can_reach(tg.num_states, false);
  std::vector<StateKey> frontier;
  for (StateKey k = 0; k < tg.num_states; ++k)
    if (contained[k]) {
      can_reach[k] = true;
      frontier.push_back(k);
    }
  while (!frontier.empty()) {
    StateKey k = frontier.back();
    frontier.pop_back();
    for (StateKey p : preds[k])
      if (!can_reach[p]) {
        can_reach[p] = true;
        frontier.push_back(p);
      }
  }
  for (StateKey k = 0; k < tg.num_states; ++k)
    if (!can_reach[k]) ++verdict.states_without_path_to_contained;

  verdict.holds =
      verdict.bad_terminal_sccs == 0 && verdict.states_without_path_to_contained == 0;
  return verdict;
}

// Text adjacency dump: "key contained1 contained2 : successor keys".
inline void dump_graph(const TransitionGraph& tg, std::ostream& out) {
  for (StateKey k = 0; k < tg.num_states; ++k) {
    out << k << " " << (tg.contained1[k] ? 1 : 0) << " " << (tg.contained2[k] ? 1 : 0)
        << " :";
    for (const auto& t : tg.transitions[k]) out << " " << t.to;
    out << "\n";
  }
}

}  // namespace ssmm
