#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssmm/protocol.hpp"

namespace ssmm {

enum class DaemonKind { RandomFair, RoundRobin, AdversarialGreedy, Exhaustive };

inline std::string_view daemon_name(DaemonKind k) {
  switch (k) {
    case DaemonKind::RandomFair: return "random-fair";
    case DaemonKind::RoundRobin: return "round-robin";
    case DaemonKind::AdversarialGreedy: return "adversarial";
    case DaemonKind::Exhaustive: return "exhaustive";
  }
  return "?";
}

inline std::optional<DaemonKind> daemon_from_name(std::string_view name) {
  for (DaemonKind k : {DaemonKind::RandomFair, DaemonKind::RoundRobin,
                       DaemonKind::AdversarialGreedy, DaemonKind::Exhaustive})
    if (daemon_name(k) == name) return k;
  return std::nullopt;
}

// Consecutive steps each node has been enabled but not selected. Counts reset
// to zero on selection or on becoming disabled.
class FairnessLedger {
 public:
  explicit FairnessLedger(NodeId n) : counts_(n, 0) {}

  std::uint32_t count(NodeId v) const { return counts_[v]; }

  std::uint32_t max_count() const {
    return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
  }

  void record(const std::vector<EnabledNode>& enabled, const std::vector<NodeId>& selected) {
    std::vector<bool> was_enabled(counts_.size(), false);
    for (const auto& e : enabled) was_enabled[e.node] = true;
    for (NodeId v : selected) was_enabled[v] = false;  // selected => reset
    for (NodeId v = 0; v < counts_.size(); ++v)
      counts_[v] = was_enabled[v] ? counts_[v] + 1 : 0;
  }

 private:
  std::vector<std::uint32_t> counts_;
};

// Locally central daemon: every selection is a nonempty independent set of
// enabled correct nodes (when any exists). Strong fairness is approximated by
// a hard cap: a node whose wait is within n of the cap is force-included
// ahead of everything else, which keeps every ledger count below the cap
// whenever cap >= n (the default cap is 4n).
class Daemon {
 public:
  Daemon(DaemonKind kind, std::uint64_t seed, NodeId n, std::uint32_t fair_cap = 0)
      : kind_(kind),
        rng_(hash_combine(seed, 0xdae0ULL)),
        n_(n),
        cap_(fair_cap == 0 ? 4 * n : fair_cap),
        ledger_(n) {}

  DaemonKind kind() const { return kind_; }
  std::uint32_t fair_cap() const { return cap_; }
  const FairnessLedger& ledger() const { return ledger_; }

  std::vector<NodeId> select(const Topology& topo, const Configuration& cfg,
                             const std::vector<EnabledNode>& enabled) {
    std::vector<NodeId> sel;
    if (!enabled.empty()) {
      std::vector<EnabledNode> starved, rest;
      const std::uint32_t threshold = cap_ > n_ ? cap_ - n_ : 0;
      for (const auto& e : enabled) {
        if (ledger_.count(e.node) >= threshold && ledger_.count(e.node) > 0)
          starved.push_back(e);
        else
          rest.push_back(e);
      }
      // Longest-starved first; ties broken by id. The greedy scan below always
      // admits the head, so a starving node's wait shrinks every step.
      std::sort(starved.begin(), starved.end(), [&](const EnabledNode& a, const EnabledNode& b) {
        if (ledger_.count(a.node) != ledger_.count(b.node))
          return ledger_.count(a.node) > ledger_.count(b.node);
        return a.node < b.node;
      });
      order_rest(rest);

      auto blocked = [&](NodeId v) {
        for (NodeId s : sel)
          if (topo.has_edge(s, v)) return true;
        return false;
      };
      for (const auto& e : starved)
        if (!blocked(e.node)) sel.push_back(e.node);

      const bool minimal =
          kind_ == DaemonKind::AdversarialGreedy || kind_ == DaemonKind::Exhaustive;
      for (const auto& e : rest) {
        if (minimal && !sel.empty()) break;
        if (!blocked(e.node)) sel.push_back(e.node);
      }
      std::sort(sel.begin(), sel.end());
    }
    ledger_.record(enabled, sel);
    if (kind_ == DaemonKind::RoundRobin) cursor_ = (cursor_ + 1) % n_;
    (void)cfg;
    return sel;
  }

 private:
  DaemonKind kind_;
  Rng rng_;
  NodeId n_;
  std::uint32_t cap_;
  FairnessLedger ledger_;
  NodeId cursor_ = 0;

  void order_rest(std::vector<EnabledNode>& rest) {
    switch (kind_) {
      case DaemonKind::RandomFair:
        rng_.shuffle(rest);
        break;
      case DaemonKind::RoundRobin:
        std::sort(rest.begin(), rest.end(), [&](const EnabledNode& a, const EnabledNode& b) {
          return (a.node + n_ - cursor_) % n_ < (b.node + n_ - cursor_) % n_;
        });
        break;
      case DaemonKind::AdversarialGreedy: {
        // Delay progress: fire at most one node, and prefer anything over a
        // marriage acceptance.
        rng_.shuffle(rest);
        std::stable_sort(rest.begin(), rest.end(), [](const EnabledNode& a, const EnabledNode& b) {
          return (a.rule == Rule::Marriage) < (b.rule == Rule::Marriage);
        });
        break;
      }
      case DaemonKind::Exhaustive:
        std::sort(rest.begin(), rest.end(),
                  [](const EnabledNode& a, const EnabledNode& b) { return a.node < b.node; });
        break;
    }
  }
};

// Every nonempty independent subset of `enabled`, for the explorer's full
// daemon fan-out. Deterministic order (by subset bitmask).
inline std::vector<std::vector<NodeId>> all_selections(const Topology& topo,
                                                       std::vector<NodeId> enabled) {
  std::sort(enabled.begin(), enabled.end());
  if (enabled.size() > 8)
    throw UsageError("all_selections limited to 8 enabled nodes, got " +
                     std::to_string(enabled.size()));
  std::vector<std::vector<NodeId>> out;
  const std::size_t k = enabled.size();
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    bool independent = true;
    for (std::size_t i = 0; i < k && independent; ++i)
      for (std::size_t j = i + 1; j < k && independent; ++j)
        if ((mask >> i & 1) && (mask >> j & 1) && topo.has_edge(enabled[i], enabled[j]))
          independent = false;
    if (!independent) continue;
    std::vector<NodeId> sel;
    for (std::size_t i = 0; i < k; ++i)
      if (mask >> i & 1) sel.push_back(enabled[i]);
    out.push_back(std::move(sel));
  }
  return out;
}

}  // namespace ssmm
