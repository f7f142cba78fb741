#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssmm/adversary.hpp"
#include "ssmm/explorer.hpp"
#include "ssmm/scheduler.hpp"
#include "ssmm/verifier.hpp"

namespace ssmm {

enum class InitKind { Explicit, Random, Exhaustive };

struct RunConfig {
  Topology topo;
  FaultModel faults;
  DaemonKind daemon = DaemonKind::RandomFair;
  std::uint64_t seed = 1;
  std::uint32_t fair_cap = 0;  // 0 => 4n
  InitKind init = InitKind::Random;
  Configuration init_config;   // used when init == Explicit
  std::uint64_t max_steps = 0; // 0 => 20 n^2
  std::uint32_t radius = 2;
  bool record = true;          // keep per-step records (needed for traces)
};

inline std::uint64_t effective_max_steps(const RunConfig& rc) {
  if (rc.max_steps) return rc.max_steps;
  std::uint64_t n = rc.topo.size();
  return 20 * n * n;
}

inline void validate_run_config(const RunConfig& rc) {
  validate_fault_model(rc.topo, rc.faults);
  if (effective_max_steps(rc) < 1) throw UsageError("max_steps must be >= 1");
  if (rc.init == InitKind::Explicit &&
      !configuration_well_formed(rc.topo, rc.init_config))
    throw UsageError("explicit initial configuration is not well-formed");
}

struct StepRecord {
  std::uint64_t step = 0;
  std::vector<EnabledNode> selection;
  std::vector<std::pair<NodeId, ProcessorState>> writes;
  Configuration config;  // resulting configuration
  std::vector<Status> status;
  ContainmentReport cont1, cont2;
  std::uint64_t potential = 0;
};

struct Summary {
  std::uint64_t steps = 0;
  bool quiesced = false;
  bool converged = false;
  std::optional<std::uint64_t> first_contained2;  // configuration index, 0 = initial
  std::optional<std::uint64_t> closure_violation_c1;  // step index
  std::optional<std::uint64_t> closure_violation_c2;
  bool final_contained_at_radius = false;
  GStarReport gstar_final;  // at the configured radius
  std::uint64_t final_potential = 0;
  std::uint32_t max_ledger_count = 0;
};

struct RunResult {
  Configuration initial;
  std::vector<StepRecord> steps;  // empty when record == false
  Configuration final_config;
  Summary summary;
};

// One full execution. Each step: the daemon picks an independent set of
// enabled correct nodes, byzantine writes are drawn from the strategies, and
// both are applied to the start-of-step configuration simultaneously. The run
// quiesces early only when no correct node is enabled and no strategy can
// still write; an active adversary keeps the clock running to max_steps and
// convergence is then judged by sustained 2-containment over the final
// quarter of the run.
inline RunResult simulate(const RunConfig& rc) {
  validate_run_config(rc);
  const Topology& topo = rc.topo;
  const std::vector<NodeId>& byz = rc.faults.byzantine;
  const std::vector<NodeId> acting = rc.faults.acting_byzantine();
  const std::uint64_t max_steps = effective_max_steps(rc);
  const bool active = rc.faults.active();

  Configuration cfg;
  switch (rc.init) {
    case InitKind::Explicit:
      cfg = rc.init_config;
      break;
    case InitKind::Random: {
      Rng rng(hash_combine(rc.seed, 0x1417ULL));
      cfg = random_configuration(topo, rng);
      break;
    }
    case InitKind::Exhaustive:
      throw UsageError("exhaustive initial configurations are a campaign mode");
  }

  Daemon daemon(rc.daemon, rc.seed, topo.size(), rc.fair_cap);

  RunResult rr;
  rr.initial = cfg;
  Summary& sum = rr.summary;

  std::vector<bool> contained2_trail;  // per configuration index
  bool prev_c1 = is_c_contained(topo, cfg, byz, 1).contained;
  bool prev_c2 = is_c_contained(topo, cfg, byz, 2).contained;
  contained2_trail.push_back(prev_c2);
  if (prev_c2) sum.first_contained2 = 0;

  std::uint64_t t = 0;
  for (; t < max_steps; ++t) {
    std::vector<EnabledNode> enabled = enabled_nodes(topo, cfg, acting);
    if (enabled.empty() && !active) {
      sum.quiesced = true;
      break;
    }
    std::vector<NodeId> picked = daemon.select(topo, cfg, enabled);
    std::vector<EnabledNode> selection;
    for (const auto& e : enabled)
      if (std::binary_search(picked.begin(), picked.end(), e.node)) selection.push_back(e);
    auto writes = byzantine_writes(rc.faults, topo, cfg, t);

    Configuration next = cfg;
    for (const auto& e : selection) next[e.node] = apply_rule(topo, cfg, e.node, e.rule);
    for (const auto& [b, s] : writes) next[b] = s;
    cfg = std::move(next);

    bool c1 = is_c_contained(topo, cfg, byz, 1).contained;
    bool c2 = is_c_contained(topo, cfg, byz, 2).contained;
    if (prev_c1 && !c1 && !sum.closure_violation_c1) sum.closure_violation_c1 = t;
    if (prev_c2 && !c2 && !sum.closure_violation_c2) sum.closure_violation_c2 = t;
    prev_c1 = c1;
    prev_c2 = c2;
    contained2_trail.push_back(c2);
    if (c2 && !sum.first_contained2) sum.first_contained2 = t + 1;
    sum.max_ledger_count = std::max(sum.max_ledger_count, daemon.ledger().max_count());

    if (rc.record) {
      StepRecord rec;
      rec.step = t;
      rec.selection = selection;
      rec.writes = writes;
      rec.config = cfg;
      for (NodeId v = 0; v < topo.size(); ++v)
        rec.status.push_back(classify(topo, cfg, v));
      rec.cont1 = is_c_contained(topo, cfg, byz, 1);
      rec.cont2 = is_c_contained(topo, cfg, byz, 2);
      rec.potential = potential(topo, cfg, byz);
      rr.steps.push_back(std::move(rec));
    }
    if (log_level() >= 2)
      std::fprintf(stderr, "step %llu: %zu selected, %zu writes\n",
                   static_cast<unsigned long long>(t), selection.size(), writes.size());
  }

  sum.steps = t;
  rr.final_config = cfg;
  if (active) {
    std::uint64_t window_start = sum.steps - sum.steps / 4;
    bool sustained = true;
    for (std::uint64_t i = window_start; i < contained2_trail.size(); ++i)
      sustained = sustained && contained2_trail[i];
    sum.converged = sustained && sum.steps == max_steps;
  } else {
    bool all_spec = true;
    for (NodeId v = 0; v < topo.size(); ++v)
      all_spec = all_spec && satisfies_spec(topo, cfg, v);
    sum.converged = sum.quiesced && all_spec;
  }
  sum.final_contained_at_radius = is_c_contained(topo, cfg, byz, rc.radius).contained;
  sum.gstar_final = g_star(topo, cfg, byz, rc.radius);
  sum.final_potential = potential(topo, cfg, byz);
  return rr;
}

// ---- Trace serialization (JSON Lines) ----------------------------------------
// Line 1 is a header with the full instance (topology, fault model, daemon,
// seeds, initial configuration); then one record per step; then a summary.
// Identical run configs produce byte-identical traces.

namespace trace {

using nlohmann::json;

inline json strategy_to_json(NodeId node, const Strategy& s) {
  json j;
  j["node"] = node;
  j["kind"] = std::string(strategy_name(s.kind));
  switch (s.kind) {
    case StrategyKind::Silent:
      break;
    case StrategyKind::RandomWrites:
      j["seed"] = s.seed;
      break;
    case StrategyKind::OscillatingDivorce:
      j["period"] = s.period;
      if (s.target) j["target"] = *s.target;
      break;
    case StrategyKind::Scripted: {
      json entries = json::array();
      for (const auto& [step, st] : s.script)
        entries.push_back({step, format_pref(st.pref), std::to_string(st.prev_pref)});
      j["entries"] = entries;
      break;
    }
  }
  return j;
}

inline Strategy strategy_from_json(const json& j) {
  Strategy s;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "silent") {
    s.kind = StrategyKind::Silent;
  } else if (kind == "random") {
    s.kind = StrategyKind::RandomWrites;
    s.seed = j.at("seed").get<std::uint64_t>();
  } else if (kind == "oscillate") {
    s.kind = StrategyKind::OscillatingDivorce;
    s.period = j.at("period").get<std::uint32_t>();
    if (j.contains("target")) s.target = j.at("target").get<NodeId>();
  } else if (kind == "scripted") {
    s.kind = StrategyKind::Scripted;
    for (const auto& e : j.at("entries")) {
      ProcessorState st;
      std::string pref = e.at(1).get<std::string>();
      if (pref != "-") st.pref = static_cast<NodeId>(std::stoul(pref));
      st.prev_pref = static_cast<NodeId>(std::stoul(e.at(2).get<std::string>()));
      s.script[e.at(0).get<std::uint64_t>()] = st;
    }
  } else {
    throw UsageError("unknown strategy kind '" + kind + "' in trace header");
  }
  return s;
}

inline json containment_to_json(const ContainmentReport& r) {
  return json{{"contained", r.contained}, {"violators", r.violators}};
}

inline json gstar_to_json(const GStarReport& g) {
  json edges = json::array(), matched = json::array();
  for (auto [u, v] : g.edges) edges.push_back({u, v});
  for (auto [u, v] : g.matched) matched.push_back({u, v});
  return json{{"vstar", g.vstar},
              {"edges", edges},
              {"matched", matched},
              {"is_matching", g.is_matching},
              {"is_maximal", g.is_maximal}};
}

inline json opt_to_json(const std::optional<std::uint64_t>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace trace

inline std::string trace_to_jsonl(const RunConfig& rc, const RunResult& rr) {
  using nlohmann::json;
  std::string out;

  json header;
  header["type"] = "header";
  header["version"] = 1;
  header["n"] = rc.topo.size();
  json edges = json::array();
  for (auto [u, v] : rc.topo.edges()) edges.push_back({u, v});
  header["edges"] = edges;
  header["byzantine"] = rc.faults.byzantine;
  json strategies = json::array();
  for (NodeId b : rc.faults.byzantine)
    strategies.push_back(trace::strategy_to_json(b, rc.faults.strategies.at(b)));
  header["strategies"] = strategies;
  header["daemon"] = std::string(daemon_name(rc.daemon));
  header["seed"] = rc.seed;
  header["fair_cap"] = rc.fair_cap;
  header["max_steps"] = effective_max_steps(rc);
  header["radius"] = rc.radius;
  header["init"] = format_configuration(rr.initial);
  out += header.dump();
  out += "\n";

  for (const StepRecord& rec : rr.steps) {
    json j;
    j["type"] = "step";
    j["step"] = rec.step;
    json sel = json::array();
    for (const auto& e : rec.selection)
      sel.push_back({e.node, std::string(1, rule_code(e.rule))});
    j["selection"] = sel;
    json writes = json::array();
    for (const auto& [b, s] : rec.writes)
      writes.push_back({b, format_pref(s.pref), std::to_string(s.prev_pref)});
    j["writes"] = writes;
    j["config"] = format_configuration(rec.config);
    json status = json::array();
    for (Status s : rec.status) status.push_back(std::string(status_name(s)));
    j["status"] = status;
    j["c1"] = trace::containment_to_json(rec.cont1);
    j["c2"] = trace::containment_to_json(rec.cont2);
    j["potential"] = rec.potential;
    out += j.dump();
    out += "\n";
  }

  const Summary& sum = rr.summary;
  json s;
  s["type"] = "summary";
  s["steps"] = sum.steps;
  s["quiesced"] = sum.quiesced;
  s["converged"] = sum.converged;
  s["first_contained2"] = trace::opt_to_json(sum.first_contained2);
  s["closure_c1"] = trace::opt_to_json(sum.closure_violation_c1);
  s["closure_c2"] = trace::opt_to_json(sum.closure_violation_c2);
  s["final_contained_at_radius"] = sum.final_contained_at_radius;
  s["gstar"] = trace::gstar_to_json(sum.gstar_final);
  s["final_potential"] = sum.final_potential;
  out += s.dump();
  out += "\n";
  return out;
}

struct TraceValidation {
  bool ok = true;
  std::string error;
};

// Replays a trace from its header: every recorded selection must have been
// enabled and independent, every write must come from a declared byzantine
// node and stay in-domain, and reapplying them to the previous configuration
// must reproduce every recorded configuration and derived verdict.
inline TraceValidation validate_trace(std::istream& in) {
  using nlohmann::json;
  auto fail = [](std::size_t line, const std::string& why) {
    return TraceValidation{false, "line " + std::to_string(line) + ": " + why};
  };
  std::string line;
  std::size_t lineno = 0;
  try {
    if (!std::getline(in, line)) return {false, "empty trace"};
    ++lineno;
    json header = json::parse(line);
    if (header.at("type") != "header") return fail(lineno, "expected header record");
    NodeId n = header.at("n").get<NodeId>();
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& e : header.at("edges"))
      edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
    Topology topo = Topology::from_edges(n, edges);
    FaultModel fm;
    fm.byzantine = header.at("byzantine").get<std::vector<NodeId>>();
    for (const auto& sj : header.at("strategies"))
      fm.strategies[sj.at("node").get<NodeId>()] = trace::strategy_from_json(sj);
    validate_fault_model(topo, fm);
    const std::vector<NodeId> acting = fm.acting_byzantine();
    const std::uint64_t max_steps = header.at("max_steps").get<std::uint64_t>();
    const std::uint32_t radius = header.at("radius").get<std::uint32_t>();

    Configuration cfg =
        parse_configuration(topo, header.at("init").get<std::vector<std::string>>());

    bool prev_c1 = is_c_contained(topo, cfg, fm.byzantine, 1).contained;
    bool prev_c2 = is_c_contained(topo, cfg, fm.byzantine, 2).contained;
    std::optional<std::uint64_t> first_c2, closure_c1, closure_c2;
    if (prev_c2) first_c2 = 0;
    std::vector<bool> contained2_trail{prev_c2};

    std::uint64_t expected_step = 0;
    bool saw_summary = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (saw_summary) return fail(lineno, "content after summary record");
      json j = json::parse(line);
      std::string type = j.at("type").get<std::string>();
      if (type == "step") {
        if (j.at("step").get<std::uint64_t>() != expected_step)
          return fail(lineno, "step index out of sequence");
        ++expected_step;

        std::vector<EnabledNode> selection;
        for (const auto& e : j.at("selection")) {
          NodeId v = e.at(0).get<NodeId>();
          std::string code = e.at(1).get<std::string>();
          auto rule = code.size() == 1 ? rule_from_code(code[0]) : std::nullopt;
          if (!rule) return fail(lineno, "unknown rule code");
          selection.push_back({v, *rule});
        }
        for (std::size_t i = 0; i < selection.size(); ++i) {
          NodeId v = selection[i].node;
          if (v >= n) return fail(lineno, "selected node out of range");
          if (std::binary_search(acting.begin(), acting.end(), v))
            return fail(lineno, "daemon selected an adversary-controlled node");
          if (enabled_rule(topo, cfg, v) != std::optional<Rule>(selection[i].rule))
            return fail(lineno, "recorded rule was not enabled at node " + std::to_string(v));
          for (std::size_t k = i + 1; k < selection.size(); ++k)
            if (topo.has_edge(v, selection[k].node))
              return fail(lineno, "selection is not an independent set");
        }

        std::vector<std::pair<NodeId, ProcessorState>> writes;
        for (const auto& w : j.at("writes")) {
          NodeId b = w.at(0).get<NodeId>();
          if (!std::binary_search(acting.begin(), acting.end(), b))
            return fail(lineno, "write from a node the adversary does not control");
          ProcessorState s;
          std::string pref = w.at(1).get<std::string>();
          if (pref != "-") s.pref = static_cast<NodeId>(std::stoul(pref));
          s.prev_pref = static_cast<NodeId>(std::stoul(w.at(2).get<std::string>()));
          if (!state_well_formed(topo, b, s))
            return fail(lineno, "byzantine write outside the variable domain");
          writes.emplace_back(b, s);
        }

        Configuration next = cfg;
        for (const auto& e : selection)
          next[e.node] = apply_rule(topo, cfg, e.node, e.rule);
        for (const auto& [b, s] : writes) next[b] = s;
        Configuration recorded =
            parse_configuration(topo, j.at("config").get<std::vector<std::string>>());
        if (recorded != next)
          return fail(lineno, "recorded configuration does not match replay");
        cfg = next;

        auto status = j.at("status").get<std::vector<std::string>>();
        if (status.size() != n) return fail(lineno, "status array has wrong length");
        for (NodeId v = 0; v < n; ++v)
          if (status[v] != status_name(classify(topo, cfg, v)))
            return fail(lineno, "recorded status mismatch at node " + std::to_string(v));

        auto c1 = is_c_contained(topo, cfg, fm.byzantine, 1);
        auto c2 = is_c_contained(topo, cfg, fm.byzantine, 2);
        if (j.at("c1").at("contained").get<bool>() != c1.contained ||
            j.at("c1").at("violators").get<std::vector<NodeId>>() != c1.violators)
          return fail(lineno, "c1 containment mismatch");
        if (j.at("c2").at("contained").get<bool>() != c2.contained ||
            j.at("c2").at("violators").get<std::vector<NodeId>>() != c2.violators)
          return fail(lineno, "c2 containment mismatch");
        if (j.at("potential").get<std::uint64_t>() != potential(topo, cfg, fm.byzantine))
          return fail(lineno, "potential mismatch");

        if (prev_c1 && !c1.contained && !closure_c1) closure_c1 = expected_step - 1;
        if (prev_c2 && !c2.contained && !closure_c2) closure_c2 = expected_step - 1;
        prev_c1 = c1.contained;
        prev_c2 = c2.contained;
        contained2_trail.push_back(c2.contained);
        if (c2.contained && !first_c2) first_c2 = expected_step;
      } else if (type == "summary") {
        saw_summary = true;
        if (j.at("steps").get<std::uint64_t>() != expected_step)
          return fail(lineno, "summary step count mismatch");
        bool quiesced = j.at("quiesced").get<bool>();
        if (quiesced) {
          if (fm.active()) return fail(lineno, "quiesced run with an active adversary");
          if (!enabled_nodes(topo, cfg, acting).empty())
            return fail(lineno, "quiesced summary but correct nodes are enabled");
        } else if (expected_step != max_steps) {
          return fail(lineno, "run ended early without quiescing");
        }
        bool converged;
        if (fm.active()) {
          std::uint64_t window_start = expected_step - expected_step / 4;
          bool sustained = expected_step == max_steps;
          for (std::uint64_t i = window_start; i < contained2_trail.size(); ++i)
            sustained = sustained && contained2_trail[i];
          converged = sustained;
        } else {
          bool all_spec = true;
          for (NodeId v = 0; v < n; ++v)
            all_spec = all_spec && satisfies_spec(topo, cfg, v);
          converged = quiesced && all_spec;
        }
        if (j.at("converged").get<bool>() != converged)
          return fail(lineno, "converged flag mismatch");
        if (j.at("first_contained2") != trace::opt_to_json(first_c2))
          return fail(lineno, "first_contained2 mismatch");
        if (j.at("closure_c1") != trace::opt_to_json(closure_c1))
          return fail(lineno, "closure_c1 mismatch");
        if (j.at("closure_c2") != trace::opt_to_json(closure_c2))
          return fail(lineno, "closure_c2 mismatch");
        auto cr = is_c_contained(topo, cfg, fm.byzantine, radius);
        if (j.at("final_contained_at_radius").get<bool>() != cr.contained)
          return fail(lineno, "final containment mismatch");
        if (j.at("gstar") != trace::gstar_to_json(g_star(topo, cfg, fm.byzantine, radius)))
          return fail(lineno, "gstar report mismatch");
        if (j.at("final_potential").get<std::uint64_t>() !=
            potential(topo, cfg, fm.byzantine))
          return fail(lineno, "final potential mismatch");
      } else {
        return fail(lineno, "unknown record type '" + type + "'");
      }
    }
    if (!saw_summary) return {false, "trace has no summary record"};
  } catch (const json::exception& e) {
    return fail(lineno, std::string("malformed JSON: ") + e.what());
  } catch (const UsageError& e) {
    return fail(lineno, e.what());
  } catch (const std::exception& e) {
    return fail(lineno, e.what());
  }
  return {};
}

// ---- Campaigns -----------------------------------------------------------------

struct CampaignResult {
  std::uint64_t runs = 0;
  std::uint64_t converged = 0;
  std::uint64_t closure_violations_c1 = 0;
  std::uint64_t closure_violations_c2 = 0;
  std::optional<std::uint64_t> max_first_contained2;  // among converged runs
  std::vector<Summary> summaries;

  double convergence_rate() const {
    return runs ? static_cast<double>(converged) / static_cast<double>(runs) : 0.0;
  }
};

namespace detail {
inline void accumulate(CampaignResult& cr, const Summary& sum) {
  ++cr.runs;
  if (sum.converged) {
    ++cr.converged;
    if (sum.first_contained2)
      cr.max_first_contained2 =
          std::max(cr.max_first_contained2.value_or(0), *sum.first_contained2);
  }
  if (sum.closure_violation_c1) ++cr.closure_violations_c1;
  if (sum.closure_violation_c2) ++cr.closure_violations_c2;
  cr.summaries.push_back(sum);
}
}  // namespace detail

// Seeded campaign: runs num_seeds independent simulations with seeds
// base.seed, base.seed+1, ...
inline CampaignResult campaign(const RunConfig& base, std::uint64_t num_seeds) {
  if (num_seeds < 1) throw UsageError("campaign needs at least one seed");
  if (base.init == InitKind::Explicit && num_seeds > 1 && log_level() >= 1)
    std::fprintf(stderr, "campaign: explicit init repeated across %llu seeds\n",
                 static_cast<unsigned long long>(num_seeds));
  CampaignResult cr;
  for (std::uint64_t i = 0; i < num_seeds; ++i) {
    RunConfig rc = base;
    rc.seed = base.seed + i;
    if (rc.init == InitKind::Exhaustive) rc.init = InitKind::Random;
    rc.record = false;
    detail::accumulate(cr, simulate(rc).summary);
    if (log_level() >= 1 && (i + 1) % 25 == 0)
      std::fprintf(stderr, "campaign: %llu/%llu runs\n",
                   static_cast<unsigned long long>(i + 1),
                   static_cast<unsigned long long>(num_seeds));
  }
  return cr;
}

// Exhaustive-initialization campaign: one run per well-formed configuration.
inline CampaignResult campaign_exhaustive(const RunConfig& base,
                                          std::uint64_t state_bound = 1u << 20) {
  const std::uint64_t total = state_count(base.topo);
  if (total > state_bound)
    throw UsageError("exhaustive campaign over " + std::to_string(total) +
                     " configurations exceeds bound " + std::to_string(state_bound));
  CampaignResult cr;
  for (StateKey key = 0; key < total; ++key) {
    RunConfig rc = base;
    rc.init = InitKind::Explicit;
    rc.init_config = decode_state(base.topo, key);
    rc.seed = hash_combine(base.seed, key);
    rc.record = false;
    detail::accumulate(cr, simulate(rc).summary);
  }
  return cr;
}

}  // namespace ssmm
