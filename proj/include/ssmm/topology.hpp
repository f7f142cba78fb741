#pragma once

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssmm/common.hpp"

namespace ssmm {

// Immutable undirected connected graph. Each adjacency list is sorted
// ascending by node id; that order doubles as the circular preorder the
// protocol scans when picking a new preference.
class Topology {
 public:
  static Topology from_edges(NodeId n,
                             const std::vector<std::pair<NodeId, NodeId>>& edges) {
    if (n < 2) throw UsageError("topology needs at least 2 nodes");
    std::vector<std::vector<NodeId>> adj(n);
    for (auto [u, v] : edges) {
      if (u >= n || v >= n)
        throw UsageError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                         ") references a node outside [0," + std::to_string(n) + ")");
      if (u == v) throw UsageError("self-loop at node " + std::to_string(u));
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (NodeId v = 0; v < n; ++v) {
      auto& nbrs = adj[v];
      std::sort(nbrs.begin(), nbrs.end());
      if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end())
        throw UsageError("duplicate edge at node " + std::to_string(v));
    }
    Topology t;
    t.adj_ = std::move(adj);
    if (!t.connected()) throw UsageError("topology is not connected");
    return t;
  }

  NodeId size() const { return static_cast<NodeId>(adj_.size()); }

  const std::vector<NodeId>& neighbors(NodeId v) const {
    check_node(v);
    return adj_[v];
  }

  NodeId degree(NodeId v) const {
    check_node(v);
    return static_cast<NodeId>(adj_[v].size());
  }

  bool has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
  }

  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> es;
    for (NodeId u = 0; u < size(); ++u)
      for (NodeId v : adj_[u])
        if (u < v) es.emplace_back(u, v);
    return es;
  }

  // Position of u inside neighbors(v); u must be a neighbor.
  std::size_t neighbor_index(NodeId v, NodeId u) const {
    const auto& nbrs = neighbors(v);
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), u);
    if (it == nbrs.end() || *it != u)
      throw UsageError("node " + std::to_string(u) + " is not a neighbor of " +
                       std::to_string(v));
    return static_cast<std::size_t>(it - nbrs.begin());
  }

  // Scans neighbors(v) starting strictly after `after` in cyclic order,
  // wrapping around so that `after` itself is tried last. Returns the first
  // neighbor accepted by the predicate.
  template <class Pred>
  std::optional<NodeId> cyclic_successor(NodeId v, NodeId after, Pred&& accept) const {
    const auto& nbrs = neighbors(v);
    std::size_t start = neighbor_index(v, after);
    for (std::size_t k = 1; k <= nbrs.size(); ++k) {
      NodeId w = nbrs[(start + k) % nbrs.size()];
      if (accept(w)) return w;
    }
    return std::nullopt;
  }

  // BFS distances in the unweighted graph.
  std::vector<NodeId> distances_from(NodeId v) const {
    check_node(v);
    return bfs({v});
  }

  // Distance to the nearest of several sources (empty set => all unreachable,
  // encoded as size()).
  std::vector<NodeId> distances_from_set(const std::vector<NodeId>& sources) const {
    for (NodeId s : sources) check_node(s);
    return bfs(sources);
  }

  NodeId distance(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    return distances_from(u)[v];
  }

 private:
  std::vector<std::vector<NodeId>> adj_;

  void check_node(NodeId v) const {
    if (v >= adj_.size())
      throw UsageError("node id " + std::to_string(v) + " out of range [0," +
                       std::to_string(adj_.size()) + ")");
  }

  std::vector<NodeId> bfs(const std::vector<NodeId>& sources) const {
    const NodeId unreached = size();
    std::vector<NodeId> dist(size(), unreached);
    std::queue<NodeId> q;
    for (NodeId s : sources) {
      if (dist[s] == unreached) {
        dist[s] = 0;
        q.push(s);
      }
    }
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop();
      for (NodeId w : adj_[u]) {
        if (dist[w] == unreached) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return dist;
  }

  bool connected() const {
    if (adj_.empty()) return false;
    auto dist = bfs({0});
    return std::find(dist.begin(), dist.end(), size()) == dist.end();
  }
};

// ---- Generators -----------------------------------------------------------

inline Topology generate_path(NodeId n) {
  if (n < 2) throw UsageError("path needs n >= 2");
  std::vector<std::pair<NodeId, NodeId>> es;
  for (NodeId i = 0; i + 1 < n; ++i) es.emplace_back(i, i + 1);
  return Topology::from_edges(n, es);
}

inline Topology generate_ring(NodeId n) {
  if (n < 3) throw UsageError("ring needs n >= 3");
  std::vector<std::pair<NodeId, NodeId>> es;
  for (NodeId i = 0; i + 1 < n; ++i) es.emplace_back(i, i + 1);
  es.emplace_back(n - 1, 0);
  return Topology::from_edges(n, es);
}

// Star with `leaves` leaves around center 0 (n = leaves + 1).
inline Topology generate_star(NodeId leaves) {
  if (leaves < 1) throw UsageError("star needs at least 1 leaf");
  std::vector<std::pair<NodeId, NodeId>> es;
  for (NodeId i = 1; i <= leaves; ++i) es.emplace_back(0, i);
  return Topology::from_edges(leaves + 1, es);
}

inline Topology generate_grid(NodeId rows, NodeId cols) {
  if (rows * cols < 2) throw UsageError("grid needs rows*cols >= 2");
  std::vector<std::pair<NodeId, NodeId>> es;
  auto id = [cols](NodeId r, NodeId c) { return r * cols + c; };
  for (NodeId r = 0; r < rows; ++r)
    for (NodeId c = 0; c < cols; ++c) {
      if (c + 1 < cols) es.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) es.emplace_back(id(r, c), id(r + 1, c));
    }
  return Topology::from_edges(rows * cols, es);
}

// G(n,p), resampled until connected. Deterministic for fixed (n, p, seed).
inline Topology generate_gnp(NodeId n, double p, std::uint64_t seed) {
  if (n < 2) throw UsageError("gnp needs n >= 2");
  if (p < 0.0 || p > 1.0) throw UsageError("gnp needs p in [0,1]");
  Rng rng(hash_combine(seed, 0x6e70ULL));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::pair<NodeId, NodeId>> es;
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (rng.unit() < p) es.emplace_back(u, v);
    try {
      return Topology::from_edges(n, es);
    } catch (const UsageError&) {
      // disconnected sample; retry
    }
  }
  throw UsageError("gnp(" + std::to_string(n) + "," + std::to_string(p) +
                   ") failed to produce a connected graph after 10000 attempts");
}

// Generator spec strings: path:N  ring:N  star:LEAVES  grid:RxC  gnp:N:P
inline Topology generate(const std::string& spec, std::uint64_t seed) {
  auto fields = [&] {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(spec);
    while (std::getline(in, cur, ':')) out.push_back(cur);
    return out;
  }();
  auto want = [&](std::size_t k) {
    if (fields.size() != k)
      throw UsageError("malformed generator spec '" + spec + "'");
  };
  auto num = [&](const std::string& s) -> NodeId {
    try {
      unsigned long v = std::stoul(s);
      if (v > 1000000) throw UsageError("generator parameter too large: " + s);
      return static_cast<NodeId>(v);
    } catch (const UsageError&) {
      throw;
    } catch (...) {
      throw UsageError("bad generator parameter '" + s + "' in '" + spec + "'");
    }
  };
  if (fields.empty()) throw UsageError("empty generator spec");
  const std::string& kind = fields[0];
  if (kind == "path") {
    want(2);
    return generate_path(num(fields[1]));
  }
  if (kind == "ring") {
    want(2);
    return generate_ring(num(fields[1]));
  }
  if (kind == "star") {
    want(2);
    return generate_star(num(fields[1]));
  }
  if (kind == "grid") {
    want(2);
    auto x = fields[1].find('x');
    if (x == std::string::npos)
      throw UsageError("grid spec must look like grid:RxC");
    return generate_grid(num(fields[1].substr(0, x)), num(fields[1].substr(x + 1)));
  }
  if (kind == "gnp") {
    want(3);
    double p;
    try {
      p = std::stod(fields[2]);
    } catch (...) {
      throw UsageError("bad gnp probability '" + fields[2] + "'");
    }
    return generate_gnp(num(fields[1]), p, seed);
  }
  throw UsageError("unknown generator kind '" + kind + "'");
}

// ---- Edge-list text format ------------------------------------------------
// First line: node count n. Each following non-empty line: "u v".

inline Topology load_topology(std::istream& in) {
  std::string line;
  NodeId n = 0;
  bool have_n = false;
  std::vector<std::pair<NodeId, NodeId>> es;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    if (tok[0] == '#') continue;
    if (!have_n) {
      try {
        n = static_cast<NodeId>(std::stoul(tok));
      } catch (...) {
        throw UsageError("topology line 1: expected node count, got '" + tok + "'");
      }
      std::string extra;
      if (ls >> extra)
        throw UsageError("topology line 1: trailing tokens after node count");
      have_n = true;
      continue;
    }
    unsigned long u, v;
    try {
      u = std::stoul(tok);
      std::string tok2;
      if (!(ls >> tok2)) throw std::runtime_error("");
      v = std::stoul(tok2);
    } catch (...) {
      throw UsageError("topology line " + std::to_string(lineno) +
                       ": expected 'u v', got '" + line + "'");
    }
    es.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  if (!have_n) throw UsageError("topology file is empty");
  return Topology::from_edges(n, es);
}

inline void save_topology(const Topology& topo, std::ostream& out) {
  out << topo.size() << "\n";
  for (auto [u, v] : topo.edges()) out << u << " " << v << "\n";
}

}  // namespace ssmm
