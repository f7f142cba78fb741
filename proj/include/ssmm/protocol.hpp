#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssmm/topology.hpp"

namespace ssmm {

// Per-node protocol variables. `pref` names the neighbor this node currently
// proposes to (or is married with); nullopt means no preference. `prev_pref`
// remembers the neighbor of the last abandoned engagement; the cyclic scan
// for a fresh candidate starts just after it, so a node never re-picks the
// neighbor that just burned it while another candidate exists.
struct ProcessorState {
  std::optional<NodeId> pref;
  NodeId prev_pref = 0;

  bool operator==(const ProcessorState&) const = default;
};

// One state per node, indexed by NodeId.
using Configuration = std::vector<ProcessorState>;

inline bool state_well_formed(const Topology& topo, NodeId v, const ProcessorState& s) {
  if (s.pref && !topo.has_edge(v, *s.pref)) return false;
  return topo.has_edge(v, s.prev_pref);
}

inline bool configuration_well_formed(const Topology& topo, const Configuration& cfg) {
  if (cfg.size() != topo.size()) return false;
  for (NodeId v = 0; v < topo.size(); ++v)
    if (!state_well_formed(topo, v, cfg[v])) return false;
  return true;
}

// ---- Node classification ----------------------------------------------------
// The five predicates partition all well-formed configurations: a node with a
// preference is proposing, married, or doomed depending on its target's
// preference; a node without one is dead or single depending on whether every
// neighbor is married.

enum class Status { Proposing, Married, Doomed, Dead, Single };

inline bool is_married(const Topology&, const Configuration& cfg, NodeId v) {
  const auto& pref = cfg[v].pref;
  return pref && cfg[*pref].pref == std::optional<NodeId>(v);
}

inline bool is_proposing(const Topology&, const Configuration& cfg, NodeId v) {
  const auto& pref = cfg[v].pref;
  return pref && !cfg[*pref].pref.has_value();
}

inline bool is_doomed(const Topology&, const Configuration& cfg, NodeId v) {
  const auto& pref = cfg[v].pref;
  if (!pref) return false;
  const auto& target = cfg[*pref].pref;
  return target.has_value() && *target != v;
}

inline bool is_dead(const Topology& topo, const Configuration& cfg, NodeId v) {
  if (cfg[v].pref) return false;
  for (NodeId u : topo.neighbors(v))
    if (!is_married(topo, cfg, u)) return false;
  return true;
}

inline bool is_single(const Topology& topo, const Configuration& cfg, NodeId v) {
  if (cfg[v].pref) return false;
  for (NodeId u : topo.neighbors(v))
    if (!is_married(topo, cfg, u)) return true;
  return false;
}

inline Status classify(const Topology& topo, const Configuration& cfg, NodeId v) {
  if (cfg[v].pref) {
    const auto& target = cfg[*cfg[v].pref].pref;
    if (!target) return Status::Proposing;
    if (*target == v) return Status::Married;
    return Status::Doomed;
  }
  return is_dead(topo, cfg, v) ? Status::Dead : Status::Single;
}

// Local legitimacy: married or dead.
inline bool satisfies_spec(const Topology& topo, const Configuration& cfg, NodeId v) {
  Status s = classify(topo, cfg, v);
  return s == Status::Married || s == Status::Dead;
}

inline std::string_view status_name(Status s) {
  switch (s) {
    case Status::Proposing: return "proposing";
    case Status::Married: return "married";
    case Status::Doomed: return "doomed";
    case Status::Dead: return "dead";
    case Status::Single: return "single";
  }
  return "?";
}

inline std::optional<Status> status_from_name(std::string_view name) {
  for (Status s : {Status::Proposing, Status::Married, Status::Doomed,
                   Status::Dead, Status::Single})
    if (status_name(s) == name) return s;
  return std::nullopt;
}

// ---- Rules ------------------------------------------------------------------

enum class Rule { Marriage, Seduction, Abandonment };

inline char rule_code(Rule r) {
  switch (r) {
    case Rule::Marriage: return 'M';
    case Rule::Seduction: return 'S';
    case Rule::Abandonment: return 'A';
  }
  return '?';
}

inline std::optional<Rule> rule_from_code(char c) {
  switch (c) {
    case 'M': return Rule::Marriage;
    case 'S': return Rule::Seduction;
    case 'A': return Rule::Abandonment;
  }
  return std::nullopt;
}

struct EnabledNode {
  NodeId node;
  Rule rule;

  bool operator==(const EnabledNode&) const = default;
};

// Guards. At most one rule is enabled per node:
//   M: no preference, and some neighbor proposes to v  -> accept one
//   S: no preference, no proposer, some neighbor free  -> propose to one
//   A: v prefers u but u prefers someone else          -> give up on u
inline std::optional<Rule> enabled_rule(const Topology& topo, const Configuration& cfg,
                                        NodeId v) {
  const auto& pref = cfg[v].pref;
  if (!pref) {
    bool any_proposer = false;
    bool any_free = false;
    for (NodeId u : topo.neighbors(v)) {
      const auto& up = cfg[u].pref;
      if (up == std::optional<NodeId>(v)) any_proposer = true;
      if (!up) any_free = true;
    }
    if (any_proposer) return Rule::Marriage;
    if (any_free) return Rule::Seduction;
    return std::nullopt;
  }
  const auto& target = cfg[*pref].pref;
  if (target && *target != v) return Rule::Abandonment;
  return std::nullopt;
}

// First neighbor strictly after prev_pref in the cyclic order (prev_pref
// itself comes last) whose preference equals `want`. The full wrap means a
// degree-1 node can still re-pick its only neighbor.
inline std::optional<NodeId> next_candidate(const Topology& topo, const Configuration& cfg,
                                            NodeId v, const std::optional<NodeId>& want) {
  return topo.cyclic_successor(v, cfg[v].prev_pref,
                               [&](NodeId w) { return cfg[w].pref == want; });
}

// All reads are taken from `cfg`; callers apply the returned states
// simultaneously for one atomic step.
inline ProcessorState apply_rule(const Topology& topo, const Configuration& cfg, NodeId v,
                                 Rule rule) {
  contract(enabled_rule(topo, cfg, v) == std::optional<Rule>(rule),
           "apply_rule: rule is not enabled at this node");
  ProcessorState next = cfg[v];
  switch (rule) {
    case Rule::Marriage: {
      auto w = next_candidate(topo, cfg, v, v);
      contract(w.has_value(), "apply_rule: M guard promised a proposer");
      next.pref = *w;
      break;
    }
    case Rule::Seduction: {
      auto w = next_candidate(topo, cfg, v, std::nullopt);
      contract(w.has_value(), "apply_rule: S guard promised a free neighbor");
      next.pref = *w;
      break;
    }
    case Rule::Abandonment:
      next.prev_pref = *next.pref;
      next.pref.reset();
      break;
  }
  return next;
}

// Enabled rules of all non-Byzantine nodes, ascending by id. `byzantine`
// must be sorted.
inline std::vector<EnabledNode> enabled_nodes(const Topology& topo, const Configuration& cfg,
                                              const std::vector<NodeId>& byzantine = {}) {
  std::vector<EnabledNode> out;
  for (NodeId v = 0; v < topo.size(); ++v) {
    if (std::binary_search(byzantine.begin(), byzantine.end(), v)) continue;
    if (auto r = enabled_rule(topo, cfg, v)) out.push_back({v, *r});
  }
  return out;
}

// ---- Text encoding ----------------------------------------------------------
// One line per node: "id pref prev_pref", with '-' for a null preference.

inline std::string format_pref(const std::optional<NodeId>& p) {
  return p ? std::to_string(*p) : "-";
}

inline std::vector<std::string> format_configuration(const Configuration& cfg) {
  std::vector<std::string> lines;
  lines.reserve(cfg.size());
  for (NodeId v = 0; v < cfg.size(); ++v)
    lines.push_back(std::to_string(v) + " " + format_pref(cfg[v].pref) + " " +
                    std::to_string(cfg[v].prev_pref));
  return lines;
}

inline Configuration parse_configuration(const Topology& topo,
                                         const std::vector<std::string>& lines) {
  if (lines.size() != topo.size())
    throw UsageError("configuration has " + std::to_string(lines.size()) +
                     " lines, topology has " + std::to_string(topo.size()) + " nodes");
  Configuration cfg(topo.size());
  std::vector<bool> seen(topo.size(), false);
  for (const auto& line : lines) {
    std::istringstream ls(line);
    std::string id_tok, pref_tok, prev_tok;
    if (!(ls >> id_tok >> pref_tok >> prev_tok))
      throw UsageError("bad configuration line '" + line + "'");
    NodeId v;
    try {
      v = static_cast<NodeId>(std::stoul(id_tok));
    } catch (...) {
      throw UsageError("bad node id '" + id_tok + "'");
    }
    if (v >= topo.size() || seen[v])
      throw UsageError("bad or repeated node id in configuration line '" + line + "'");
    seen[v] = true;
    ProcessorState s;
    try {
      if (pref_tok != "-") s.pref = static_cast<NodeId>(std::stoul(pref_tok));
      s.prev_pref = static_cast<NodeId>(std::stoul(prev_tok));
    } catch (...) {
      throw UsageError("bad configuration line '" + line + "'");
    }
    if (!state_well_formed(topo, v, s))
      throw UsageError("configuration line '" + line +
                       "' violates the per-node variable domain");
    cfg[v] = s;
  }
  return cfg;
}

inline Configuration random_configuration(const Topology& topo, Rng& rng) {
  Configuration cfg(topo.size());
  for (NodeId v = 0; v < topo.size(); ++v) {
    const auto& nbrs = topo.neighbors(v);
    std::uint64_t pick = rng.below(nbrs.size() + 1);
    if (pick < nbrs.size()) cfg[v].pref = nbrs[pick];
    cfg[v].prev_pref = nbrs[rng.below(nbrs.size())];
  }
  return cfg;
}

}  // namespace ssmm
