#include <catch2/catch_amalgamated.hpp>

#include "ssmm/adversary.hpp"
#include "ssmm/harness.hpp"

using namespace ssmm;

TEST_CASE("silent strategy writes nothing") {
  Topology p3 = generate_path(3);
  FaultModel fm;
  fm.byzantine = {0};
  fm.strategies[0] = Strategy{};  // silent
  Configuration cfg = {{1, 1}, {0, 0}, {std::nullopt, 1}};
  for (std::uint64_t t = 0; t < 10; ++t)
    CHECK(byzantine_writes(fm, p3, cfg, t).empty());
  CHECK(!fm.active());
}

TEST_CASE("oscillating divorce alternates between a marriage offer and null") {
  Topology p3 = generate_path(3);
  FaultModel fm;
  fm.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::OscillatingDivorce;
  s.period = 1;
  fm.strategies[0] = s;
  Configuration cfg = {{1, 1}, {0, 0}, {std::nullopt, 1}};
  for (std::uint64_t t = 0; t < 6; ++t) {
    auto writes = byzantine_writes(fm, p3, cfg, t);
    REQUIRE(writes.size() == 1);
    REQUIRE(writes[0].first == 0);
    if (t % 2 == 0)
      CHECK(writes[0].second.pref == std::optional<NodeId>(1));
    else
      CHECK(!writes[0].second.pref.has_value());
  }

  // period 2 switches phase every two steps
  fm.strategies[0].period = 2;
  CHECK(byzantine_writes(fm, p3, cfg, 0)[0].second.pref.has_value());
  CHECK(byzantine_writes(fm, p3, cfg, 1)[0].second.pref.has_value());
  CHECK(!byzantine_writes(fm, p3, cfg, 2)[0].second.pref.has_value());
  CHECK(!byzantine_writes(fm, p3, cfg, 3)[0].second.pref.has_value());
}

TEST_CASE("scripted strategy emits exactly its entries") {
  Topology p3 = generate_path(3);
  FaultModel fm;
  fm.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::Scripted;
  s.script[3] = ProcessorState{std::nullopt, 1};
  fm.strategies[0] = s;
  Configuration cfg = {{1, 1}, {0, 0}, {std::nullopt, 1}};
  CHECK(byzantine_writes(fm, p3, cfg, 0).empty());
  CHECK(byzantine_writes(fm, p3, cfg, 2).empty());
  auto writes = byzantine_writes(fm, p3, cfg, 3);
  REQUIRE(writes.size() == 1);
  CHECK(!writes[0].second.pref.has_value());
  CHECK(writes[0].second.prev_pref == 1);
}

TEST_CASE("fault model validation") {
  Topology p3 = generate_path(3);
  FaultModel bad_script;
  bad_script.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::Scripted;
  s.script[0] = ProcessorState{2, 1};  // 2 is not a neighbor of 0
  bad_script.strategies[0] = s;
  CHECK_THROWS_AS(validate_fault_model(p3, bad_script), UsageError);

  FaultModel bad_target;
  bad_target.byzantine = {0};
  Strategy o;
  o.kind = StrategyKind::OscillatingDivorce;
  o.target = 2;
  bad_target.strategies[0] = o;
  CHECK_THROWS_AS(validate_fault_model(p3, bad_target), UsageError);

  FaultModel out_of_range;
  out_of_range.byzantine = {7};
  out_of_range.strategies[7] = Strategy{};
  CHECK_THROWS_AS(validate_fault_model(p3, out_of_range), UsageError);

  FaultModel missing_strategy;
  missing_strategy.byzantine = {0};
  CHECK_THROWS_AS(validate_fault_model(p3, missing_strategy), UsageError);
}

TEST_CASE("random writes stay in the variable domain and are reproducible") {
  Topology g = generate_gnp(6, 0.5, 17);
  FaultModel fm;
  fm.byzantine = {1, 4};
  Strategy s;
  s.kind = StrategyKind::RandomWrites;
  s.seed = 99;
  fm.strategies[1] = s;
  fm.strategies[4] = s;
  Configuration cfg(6);
  for (NodeId v = 0; v < 6; ++v) cfg[v] = {std::nullopt, g.neighbors(v)[0]};
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto writes = byzantine_writes(fm, g, cfg, t);
    REQUIRE(writes.size() == 2);
    REQUIRE(writes[0].first == 1);
    REQUIRE(writes[1].first == 4);
    for (const auto& [b, st] : writes) REQUIRE(state_well_formed(g, b, st));
    REQUIRE(writes == byzantine_writes(fm, g, cfg, t));
  }
}

TEST_CASE("writes only ever touch byzantine nodes") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    Topology g = generate_gnp(6, 0.5, 8000 + i);
    FaultModel fm;
    for (NodeId v = 0; v < g.size(); ++v)
      if (rng.below(3) == 0) fm.byzantine.push_back(v);
    for (NodeId b : fm.byzantine) {
      Strategy s;
      s.kind = StrategyKind::RandomWrites;
      s.seed = rng.next();
      fm.strategies[b] = s;
    }
    Configuration cfg = random_configuration(g, rng);
    for (std::uint64_t t = 0; t < 20; ++t)
      for (const auto& [b, st] : byzantine_writes(fm, g, cfg, t))
        REQUIRE(fm.is_byzantine(b));
  }
}

TEST_CASE("all-silent byzantine runs are bit-identical to fault-free runs") {
  Topology p4 = generate_path(4);
  RunConfig with_silent;
  with_silent.topo = p4;
  with_silent.seed = 11;
  with_silent.max_steps = 100;
  with_silent.faults.byzantine = {0};
  with_silent.faults.strategies[0] = Strategy{};  // silent

  RunConfig without = with_silent;
  without.faults = FaultModel{};

  RunResult a = simulate(with_silent);
  RunResult b = simulate(without);
  // identical executions step for step
  REQUIRE(a.initial == b.initial);
  REQUIRE(a.final_config == b.final_config);
  REQUIRE(a.summary.steps == b.summary.steps);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    REQUIRE(a.steps[i].selection == b.steps[i].selection);
    REQUIRE(a.steps[i].config == b.steps[i].config);
  }
}

TEST_CASE("bundled counterexample scenario") {
  Topology p3 = generate_path(3);
  CounterexampleScenario sc = counterexample_script(p3);
  CHECK(sc.byz == 0);
  CHECK(sc.middle == 1);
  CHECK(sc.far == 2);
  CHECK(p3.distance(sc.far, sc.byz) == 2);

  // initially every node, including the byzantine one, is legitimate
  for (NodeId v = 0; v < 3; ++v) CHECK(satisfies_spec(p3, sc.initial, v));

  // the scripted divorce turns the far node single
  auto writes = byzantine_writes(sc.faults, p3, sc.initial, 0);
  REQUIRE(writes.size() == 1);
  Configuration after = sc.initial;
  after[writes[0].first] = writes[0].second;
  CHECK(classify(p3, after, sc.far) == Status::Single);
  CHECK(!satisfies_spec(p3, after, sc.far));

  CHECK_THROWS_AS(counterexample_script(generate_ring(3)), UsageError);
  CHECK_THROWS_AS(counterexample_script(generate_path(4)), UsageError);
}
