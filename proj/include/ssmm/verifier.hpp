#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ssmm/protocol.hpp"

namespace ssmm {

// ---- c-correct sets and containment ----------------------------------------

// Correct nodes at distance strictly greater than c from every byzantine
// node. With no byzantine nodes this is all of V.
inline std::vector<NodeId> c_correct_set(const Topology& topo,
                                         const std::vector<NodeId>& byzantine,
                                         std::uint32_t c) {
  std::vector<NodeId> out;
  if (byzantine.empty()) {
    for (NodeId v = 0; v < topo.size(); ++v) out.push_back(v);
    return out;
  }
  auto dist = topo.distances_from_set(byzantine);
  for (NodeId v = 0; v < topo.size(); ++v)
    if (dist[v] > c) out.push_back(v);
  return out;
}

struct ContainmentReport {
  std::uint32_t c = 0;
  std::vector<NodeId> c_correct;
  bool contained = true;
  std::vector<NodeId> violators;  // c-correct nodes with spec false
};

inline ContainmentReport is_c_contained(const Topology& topo, const Configuration& cfg,
                                        const std::vector<NodeId>& byzantine,
                                        std::uint32_t c) {
  ContainmentReport r;
  r.c = c;
  r.c_correct = c_correct_set(topo, byzantine, c);
  for (NodeId v : r.c_correct)
    if (!satisfies_spec(topo, cfg, v)) r.violators.push_back(v);
  r.contained = r.violators.empty();
  return r;
}

// ---- The matched subgraph G* ------------------------------------------------

struct GStarReport {
  std::vector<NodeId> vstar;
  std::vector<std::pair<NodeId, NodeId>> edges;    // induced edges, u < v
  std::vector<std::pair<NodeId, NodeId>> matched;  // mutual pref pairs in V*, u < v
  bool is_matching = true;
  bool is_maximal = true;
};

// V* is the c-correct set plus every outside node mutually married to a
// c-correct node; the report checks whether the mutual pref pairs form a
// maximal matching on the induced subgraph.
inline GStarReport g_star(const Topology& topo, const Configuration& cfg,
                          const std::vector<NodeId>& byzantine, std::uint32_t c) {
  GStarReport r;
  auto vc = c_correct_set(topo, byzantine, c);
  std::vector<bool> in_vc(topo.size(), false);
  for (NodeId v : vc) in_vc[v] = true;

  std::vector<bool> in_vstar = in_vc;
  for (NodeId v = 0; v < topo.size(); ++v) {
    if (in_vc[v]) continue;
    const auto& pref = cfg[v].pref;
    if (pref && in_vc[*pref] && cfg[*pref].pref == std::optional<NodeId>(v))
      in_vstar[v] = true;
  }
  for (NodeId v = 0; v < topo.size(); ++v)
    if (in_vstar[v]) r.vstar.push_back(v);

  for (NodeId u : r.vstar)
    for (NodeId v : topo.neighbors(u))
      if (u < v && in_vstar[v]) r.edges.emplace_back(u, v);

  std::vector<bool> matched_node(topo.size(), false);
  for (NodeId u : r.vstar) {
    const auto& pref = cfg[u].pref;
    if (pref && *pref > u && in_vstar[*pref] &&
        cfg[*pref].pref == std::optional<NodeId>(u)) {
      r.matched.emplace_back(u, *pref);
      if (matched_node[u] || matched_node[*pref]) r.is_matching = false;
      matched_node[u] = matched_node[*pref] = true;
    }
  }
  for (auto [u, v] : r.edges)
    if (!matched_node[u] && !matched_node[v]) r.is_maximal = false;
  return r;
}

// Independent brute-force oracle: `pairs` is a maximal matching on `edges`
// iff it is a matching and extending it by any single remaining edge breaks
// the matching property. Checked by direct enumeration, not by endpoint
// coverage, so it exercises a different route than g_star.
inline bool oracle_check_maximal(const std::vector<std::pair<NodeId, NodeId>>& edges,
                                 const std::vector<std::pair<NodeId, NodeId>>& pairs) {
  auto normalize = [](std::pair<NodeId, NodeId> e) {
    if (e.first > e.second) std::swap(e.first, e.second);
    return e;
  };
  auto is_matching = [&](const std::vector<std::pair<NodeId, NodeId>>& m) {
    std::map<NodeId, int> uses;
    for (auto [u, v] : m) {
      if (u == v) return false;
      if (++uses[u] > 1 || ++uses[v] > 1) return false;
    }
    return true;
  };
  std::vector<std::pair<NodeId, NodeId>> norm_edges;
  for (auto e : edges) norm_edges.push_back(normalize(e));
  for (auto p : pairs) {
    if (std::find(norm_edges.begin(), norm_edges.end(), normalize(p)) == norm_edges.end())
      return false;  // pair is not an edge of the instance
  }
  if (!is_matching(pairs)) return false;
  for (auto e : norm_edges) {
    bool already = false;
    for (auto p : pairs)
      if (normalize(p) == e) already = true;
    if (already) continue;
    auto extended = pairs;
    extended.push_back(e);
    if (is_matching(extended)) return false;  // augmenting edge exists
  }
  return true;
}

// ---- Closure over a configuration sequence ----------------------------------

// First step index i such that configs[i] is c-contained and configs[i+1] is
// not; nullopt means closure held throughout.
inline std::optional<std::size_t> closure_check(const Topology& topo,
                                                const std::vector<Configuration>& configs,
                                                const std::vector<NodeId>& byzantine,
                                                std::uint32_t c) {
  if (configs.empty()) return std::nullopt;
  bool prev = is_c_contained(topo, configs[0], byzantine, c).contained;
  for (std::size_t i = 1; i < configs.size(); ++i) {
    bool cur = is_c_contained(topo, configs[i], byzantine, c).contained;
    if (prev && !cur) return i - 1;
    prev = cur;
  }
  return std::nullopt;
}

// ---- Diagnostic potential ----------------------------------------------------

// Weighted count of not-yet-settled 2-correct nodes. Reported in traces as a
// convergence instrument; never used as a correctness gate.
inline std::uint64_t potential(const Topology& topo, const Configuration& cfg,
                               const std::vector<NodeId>& byzantine) {
  std::uint64_t total = 0;
  for (NodeId v : c_correct_set(topo, byzantine, 2)) {
    switch (classify(topo, cfg, v)) {
      case Status::Married:
      case Status::Dead: break;
      case Status::Proposing: total += 1; break;
      case Status::Doomed: total += 2; break;
      case Status::Single: total += 3; break;
    }
  }
  return total;
}

}  // namespace ssmm
