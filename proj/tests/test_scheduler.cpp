#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ssmm/adversary.hpp"
#include "ssmm/scheduler.hpp"

using namespace ssmm;

namespace {

// Reference enumeration: every nonempty subset with no adjacent pair.
std::vector<std::vector<NodeId>> brute_force_selections(const Topology& t,
                                                        const std::vector<NodeId>& enabled) {
  std::vector<std::vector<NodeId>> out;
  for (std::uint32_t mask = 1; mask < (1u << enabled.size()); ++mask) {
    std::vector<NodeId> sel;
    for (std::size_t i = 0; i < enabled.size(); ++i)
      if (mask >> i & 1) sel.push_back(enabled[i]);
    bool ok = true;
    for (std::size_t i = 0; i < sel.size() && ok; ++i)
      for (std::size_t j = i + 1; j < sel.size() && ok; ++j)
        if (t.has_edge(sel[i], sel[j])) ok = false;
    if (ok) out.push_back(sel);
  }
  return out;
}

bool independent(const Topology& t, const std::vector<NodeId>& sel) {
  for (std::size_t i = 0; i < sel.size(); ++i)
    for (std::size_t j = i + 1; j < sel.size(); ++j)
      if (t.has_edge(sel[i], sel[j])) return false;
  return true;
}

}  // namespace

TEST_CASE("selections are nonempty independent subsets of the enabled set") {
  Topology p2 = generate_path(2);
  Configuration both_free = {{std::nullopt, 1}, {std::nullopt, 0}};
  for (DaemonKind kind : {DaemonKind::RandomFair, DaemonKind::RoundRobin,
                          DaemonKind::AdversarialGreedy, DaemonKind::Exhaustive}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Daemon d(kind, seed, 2);
      auto sel = d.select(p2, both_free, enabled_nodes(p2, both_free));
      REQUIRE(sel.size() == 1);  // neighbors never together
    }
  }

  Topology p3 = generate_path(3);
  // 0 is doomed (abandon enabled), 2 can accept 1's proposal, 1 is proposing
  Configuration ends_enabled = {{1, 1}, {2, 0}, {std::nullopt, 1}};
  auto enabled = enabled_nodes(p3, ends_enabled);
  REQUIRE(enabled.size() == 2);
  std::set<std::vector<NodeId>> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Daemon d(DaemonKind::RandomFair, seed, 3);
    auto sel = d.select(p3, ends_enabled, enabled);
    REQUIRE(!sel.empty());
    REQUIRE(independent(p3, sel));
    seen.insert(sel);
  }
  // 0 and 2 are not adjacent: {0}, {2} and {0,2} are all legal
  CHECK(seen.count({0, 2}) == 1);

  Daemon d(DaemonKind::RandomFair, 1, 3);
  CHECK(d.select(p3, ends_enabled, {}).empty());
}

TEST_CASE("every selection over a long adversarial run is independent") {
  Topology ring = generate_ring(6);
  FaultModel fm;
  fm.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::RandomWrites;
  s.seed = 5;
  fm.strategies[0] = s;
  for (DaemonKind kind : {DaemonKind::RandomFair, DaemonKind::RoundRobin,
                          DaemonKind::AdversarialGreedy}) {
    Rng rng(42);
    Configuration cfg = random_configuration(ring, rng);
    Daemon d(kind, 9, ring.size());
    for (std::uint64_t t = 0; t < 500; ++t) {
      auto enabled = enabled_nodes(ring, cfg, fm.byzantine);
      auto sel = d.select(ring, cfg, enabled);
      REQUIRE(independent(ring, sel));
      if (!enabled.empty()) REQUIRE(!sel.empty());
      Configuration next = cfg;
      for (const auto& e : enabled)
        if (std::binary_search(sel.begin(), sel.end(), e.node))
          next[e.node] = apply_rule(ring, cfg, e.node, e.rule);
      for (auto& [b, st] : byzantine_writes(fm, ring, cfg, t)) next[b] = st;
      cfg = next;
    }
  }
}

TEST_CASE("fairness ledger never exceeds the cap") {
  // An oscillating byzantine keeps the system busy for the whole run.
  Topology p6 = generate_path(6);
  FaultModel fm;
  fm.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::OscillatingDivorce;
  s.period = 1;
  fm.strategies[0] = s;
  for (DaemonKind kind : {DaemonKind::RandomFair, DaemonKind::RoundRobin}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      Configuration cfg = random_configuration(p6, rng);
      Daemon d(kind, seed, p6.size());
      for (std::uint64_t t = 0; t < 2000; ++t) {
        auto enabled = enabled_nodes(p6, cfg, fm.byzantine);
        auto sel = d.select(p6, cfg, enabled);
        REQUIRE(d.ledger().max_count() <= d.fair_cap());
        Configuration next = cfg;
        for (const auto& e : enabled)
          if (std::binary_search(sel.begin(), sel.end(), e.node))
            next[e.node] = apply_rule(p6, cfg, e.node, e.rule);
        for (auto& [b, st] : byzantine_writes(fm, p6, cfg, t)) next[b] = st;
        cfg = next;
      }
    }
  }
}

TEST_CASE("ledger counts reset on selection and on becoming disabled") {
  Topology p2 = generate_path(2);
  FairnessLedger ledger(2);
  std::vector<EnabledNode> enabled = {{0, Rule::Seduction}, {1, Rule::Seduction}};
  ledger.record(enabled, {0});
  CHECK(ledger.count(0) == 0);
  CHECK(ledger.count(1) == 1);
  ledger.record(enabled, {0});
  CHECK(ledger.count(1) == 2);
  ledger.record({}, {});  // 1 became disabled
  CHECK(ledger.count(1) == 0);
}

TEST_CASE("exhaustive selection enumeration matches brute force") {
  Topology p3 = generate_path(3);
  CHECK(all_selections(p3, {0, 1}) ==
        std::vector<std::vector<NodeId>>{{0}, {1}});
  CHECK(all_selections(p3, {0, 2}) ==
        std::vector<std::vector<NodeId>>{{0}, {2}, {0, 2}});
  CHECK(all_selections(p3, {1}) == std::vector<std::vector<NodeId>>{{1}});

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Topology g = generate_gnp(5, 0.5, 7000 + seed);
    std::vector<NodeId> enabled;
    Rng rng(seed);
    for (NodeId v = 0; v < g.size(); ++v)
      if (rng.below(2)) enabled.push_back(v);
    auto got = all_selections(g, enabled);
    auto want = brute_force_selections(g, enabled);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }

  Topology star = generate_star(9);
  CHECK_THROWS_AS(all_selections(star, {0, 1, 2, 3, 4, 5, 6, 7, 8}), UsageError);
}

TEST_CASE("daemon selection is deterministic per seed") {
  Topology ring = generate_ring(5);
  Configuration cfg(5);
  for (NodeId v = 0; v < 5; ++v) cfg[v] = {std::nullopt, ring.neighbors(v)[0]};
  auto enabled = enabled_nodes(ring, cfg);
  for (DaemonKind kind : {DaemonKind::RandomFair, DaemonKind::AdversarialGreedy}) {
    Daemon a(kind, 77, 5), b(kind, 77, 5);
    for (int i = 0; i < 10; ++i) REQUIRE(a.select(ring, cfg, enabled) == b.select(ring, cfg, enabled));
  }
}
