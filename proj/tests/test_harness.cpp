#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ssmm/cli.hpp"
#include "ssmm/harness.hpp"
#include "test_support.hpp"

using namespace ssmm;

namespace {

RunConfig p4_all_null() {
  RunConfig rc;
  rc.topo = generate_path(4);
  rc.seed = 1;
  rc.init = InitKind::Explicit;
  rc.init_config.resize(4);
  for (NodeId v = 0; v < 4; ++v)
    rc.init_config[v] = {std::nullopt, rc.topo.neighbors(v)[0]};
  return rc;
}

std::string temp_path(const std::string& name) {
  return std::string("harness_test_") + name;
}

}  // namespace

TEST_CASE("a fault-free run settles into an oracle-confirmed maximal matching") {
  RunConfig rc = p4_all_null();
  RunResult rr = simulate(rc);
  CHECK(rr.summary.quiesced);
  CHECK(rr.summary.converged);
  CHECK(rr.summary.steps <= effective_max_steps(rc));
  GStarReport g = g_star(rc.topo, rr.final_config, {}, 2);
  CHECK(g.is_matching);
  CHECK(oracle_check_maximal(g.edges, g.matched));
  CHECK(rr.summary.gstar_final.is_maximal);
}

TEST_CASE("identical run configs produce byte-identical traces") {
  RunConfig rc = p4_all_null();
  rc.init = InitKind::Random;
  rc.seed = 77;
  std::string a = trace_to_jsonl(rc, simulate(rc));
  std::string b = trace_to_jsonl(rc, simulate(rc));
  CHECK(a == b);
  CHECK(!a.empty());

  rc.seed = 78;
  std::string c = trace_to_jsonl(rc, simulate(rc));
  CHECK(a != c);
}

TEST_CASE("emitted traces validate; tampered traces do not") {
  RunConfig rc;
  rc.topo = generate_path(6);
  rc.seed = 5;
  rc.max_steps = 60;
  rc.faults.byzantine = {0};
  Strategy s;
  s.kind = StrategyKind::OscillatingDivorce;
  s.period = 2;
  rc.faults.strategies[0] = s;
  std::string trace = trace_to_jsonl(rc, simulate(rc));

  {
    std::istringstream in(trace);
    TraceValidation v = validate_trace(in);
    INFO(v.error);
    CHECK(v.ok);
  }

  // flip node 0's recorded pref inside the first step's config array
  std::size_t pos = trace.find("\"config\":[\"0 ");
  REQUIRE(pos != std::string::npos);
  std::string tampered = trace;
  char& digit = tampered[pos + 13];
  digit = digit == '1' ? '0' : '1';
  {
    std::istringstream in(tampered);
    CHECK(!validate_trace(in).ok);
  }

  // truncation loses the summary
  std::string truncated = trace.substr(0, trace.rfind("{\"type\":\"summary\""));
  {
    std::istringstream in(truncated);
    CHECK(!validate_trace(in).ok);
  }

  {
    std::istringstream in(std::string{});
    CHECK(!validate_trace(in).ok);
  }
}

TEST_CASE("counterexample scenario summary") {
  Topology p3 = generate_path(3);
  CounterexampleScenario sc = counterexample_script(p3);
  RunConfig rc;
  rc.topo = p3;
  rc.faults = sc.faults;
  rc.init = InitKind::Explicit;
  rc.init_config = sc.initial;
  rc.max_steps = 2;
  RunResult rr = simulate(rc);
  CHECK(rr.summary.closure_violation_c1 == std::optional<std::uint64_t>(0));
  CHECK(!rr.summary.closure_violation_c2.has_value());
  REQUIRE(!rr.steps.empty());
  CHECK(rr.steps[0].cont1.violators == std::vector<NodeId>{sc.far});
}

TEST_CASE("a single-seed campaign is one simulation") {
  RunConfig rc = p4_all_null();
  rc.init = InitKind::Random;
  rc.seed = 42;
  CampaignResult cr = campaign(rc, 1);
  rc.record = false;
  Summary direct = simulate(rc).summary;
  REQUIRE(cr.runs == 1);
  CHECK(cr.summaries[0].steps == direct.steps);
  CHECK(cr.summaries[0].converged == direct.converged);
  CHECK(cr.converged == (direct.converged ? 1u : 0u));
}

TEST_CASE("fault-free campaigns on every 4-node shape reach spec everywhere") {
  for (const Topology& t : ssmm::testing::connected_four_node_graphs_up_to_iso()) {
    RunConfig rc;
    rc.topo = t;
    rc.seed = 7;
    CampaignResult cr = campaign(rc, 60);
    CHECK(cr.converged == cr.runs);
    CHECK(cr.closure_violations_c2 == 0);
  }
}

TEST_CASE("exhaustive campaign walks every initial configuration") {
  RunConfig rc;
  rc.topo = generate_path(3);
  rc.seed = 3;
  CampaignResult cr = campaign_exhaustive(rc);
  CHECK(cr.runs == state_count(rc.topo));
  CHECK(cr.converged == cr.runs);

  RunConfig big;
  big.topo = generate_gnp(8, 0.8, 2);
  CHECK_THROWS_AS(campaign_exhaustive(big, 1000), UsageError);
}

TEST_CASE("cli: counterexample exits 0 and prints both verdicts") {
  CHECK(cli({"counterexample"}) == 0);
}

TEST_CASE("cli: unknown subcommand and bad flags exit 2") {
  CHECK(cli({"bogus"}) == 2);
  CHECK(cli({}) == 2);
  CHECK(cli({"simulate"}) == 2);                            // no topology
  CHECK(cli({"simulate", "--gen", "mesh:4"}) == 2);         // unknown generator
  CHECK(cli({"simulate", "--gen", "path:4", "--daemon", "chaotic"}) == 2);
  CHECK(cli({"simulate", "--gen", "path:4", "--byzantine", "9"}) == 2);
  CHECK(cli({"validate-trace", "no_such_file.jsonl"}) == 2);
}

TEST_CASE("cli: simulate, trace, validate round trip") {
  std::string trace_file = temp_path("trace.jsonl");
  CHECK(cli({"simulate", "--gen", "path:4", "--seed", "9", "--max-steps", "100",
             "--out", trace_file}) == 0);
  CHECK(cli({"validate-trace", trace_file}) == 0);

  // single-byte mutation must be detected
  std::ifstream in(trace_file, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string data = buf.str();
  std::size_t pos = data.find("\"init\":[\"0 ");
  REQUIRE(pos != std::string::npos);
  data[pos + 11] = data[pos + 11] == '1' ? '2' : '1';
  std::string bad_file = temp_path("tampered.jsonl");
  {
    std::ofstream out(bad_file, std::ios::binary);
    out << data;
  }
  CHECK(cli({"validate-trace", bad_file}) == 1);
  std::remove(trace_file.c_str());
  std::remove(bad_file.c_str());
}

TEST_CASE("cli: gen-topology emits a loadable file") {
  std::string topo_file = temp_path("topo.txt");
  CHECK(cli({"gen-topology", "--gen", "grid:3x2", "--out", topo_file}) == 0);
  std::ifstream in(topo_file);
  Topology t = load_topology(in);
  CHECK(t.size() == 6);
  CHECK(t.edges().size() == 7);
  CHECK(cli({"simulate", "--topology", topo_file, "--seed", "4"}) == 0);
  std::remove(topo_file.c_str());
}

TEST_CASE("cli: campaign and explore run end to end") {
  CHECK(cli({"campaign", "--gen", "path:4", "--runs", "20", "--seed", "11"}) == 0);
  CHECK(cli({"explore", "--gen", "path:3", "--byzantine", "0", "--radius", "2"}) == 0);
  // radius 1 on the 3-path is refutable, so explore reports a check failure
  CHECK(cli({"explore", "--gen", "path:3", "--byzantine", "0", "--radius", "1"}) == 1);
  // bound guard is a usage error
  CHECK(cli({"explore", "--gen", "path:4", "--byzantine", "0", "--bound", "10"}) == 2);
}
