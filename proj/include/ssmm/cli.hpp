#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssmm/harness.hpp"

namespace ssmm {

namespace cli_detail {

inline std::vector<NodeId> parse_node_list(const std::string& s) {
  std::vector<NodeId> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(static_cast<NodeId>(std::stoul(tok)));
    } catch (...) {
      throw UsageError("bad node id '" + tok + "' in list '" + s + "'");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Script file: one write per line, "step node pref prev" with '-' for null.
inline std::map<NodeId, Strategy> parse_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open script file '" + path + "'");
  std::map<NodeId, Strategy> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string step_tok, node_tok, pref_tok, prev_tok;
    if (!(ls >> step_tok)) continue;
    if (step_tok[0] == '#') continue;
    if (!(ls >> node_tok >> pref_tok >> prev_tok))
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected 'step node pref prev'");
    try {
      std::uint64_t step = std::stoull(step_tok);
      NodeId node = static_cast<NodeId>(std::stoul(node_tok));
      ProcessorState s;
      if (pref_tok != "-") s.pref = static_cast<NodeId>(std::stoul(pref_tok));
      s.prev_pref = static_cast<NodeId>(std::stoul(prev_tok));
      Strategy& st = out[node];
      st.kind = StrategyKind::Scripted;
      if (st.script.count(step))
        throw UsageError(path + ":" + std::to_string(lineno) +
                         ": duplicate script entry for step " + step_tok);
      st.script[step] = s;
    } catch (const UsageError&) {
      throw;
    } catch (...) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad script line '" +
                       line + "'");
    }
  }
  return out;
}

inline FaultModel make_fault_model(const Topology& topo, const std::vector<NodeId>& byz,
                                   const std::string& strategy_spec, std::uint64_t seed) {
  FaultModel fm;
  fm.byzantine = byz;
  std::vector<std::string> fields;
  {
    std::string tok;
    std::istringstream in(strategy_spec);
    while (std::getline(in, tok, ':')) fields.push_back(tok);
  }
  if (fields.empty()) throw UsageError("empty strategy spec");
  const std::string& kind = fields[0];
  if (kind == "scripted") {
    if (fields.size() != 2) throw UsageError("scripted strategy needs scripted:FILE");
    auto scripts = parse_script_file(fields[1]);
    for (const auto& [node, st] : scripts)
      if (!fm.is_byzantine(node))
        throw UsageError("script writes node " + std::to_string(node) +
                         " which is not in --byzantine");
    for (NodeId b : byz) {
      Strategy st;
      st.kind = StrategyKind::Scripted;
      auto it = scripts.find(b);
      if (it != scripts.end()) st = it->second;
      fm.strategies[b] = st;
    }
  } else {
    for (NodeId b : byz) {
      Strategy st;
      if (kind == "silent") {
        st.kind = StrategyKind::Silent;
      } else if (kind == "random") {
        st.kind = StrategyKind::RandomWrites;
        st.seed = hash_combine(seed, 0xadeULL);
      } else if (kind == "oscillate") {
        st.kind = StrategyKind::OscillatingDivorce;
        if (fields.size() < 2 || fields.size() > 3)
          throw UsageError("oscillate strategy needs oscillate:PERIOD[:TARGET]");
        try {
          st.period = static_cast<std::uint32_t>(std::stoul(fields[1]));
          if (fields.size() == 3)
            st.target = static_cast<NodeId>(std::stoul(fields[2]));
        } catch (...) {
          throw UsageError("bad oscillate parameters in '" + strategy_spec + "'");
        }
      } else {
        throw UsageError("unknown strategy '" + kind + "'");
      }
      fm.strategies[b] = st;
    }
  }
  validate_fault_model(topo, fm);
  return fm;
}

struct InstanceOpts {
  std::string topology_file;
  std::string gen_spec;
  std::string byzantine = "";
  std::string strategy = "random";
  std::string daemon = "random-fair";
  std::uint64_t seed = 1;
  std::uint32_t fair_cap = 0;
  std::uint64_t max_steps = 0;
  std::uint32_t radius = 2;
  std::string init = "random";
  std::string out;
};

inline void add_topology_flags(CLI::App* cmd, InstanceOpts& o) {
  cmd->add_option("--topology", o.topology_file, "edge-list topology file");
  cmd->add_option("--gen", o.gen_spec,
                  "generator spec: path:N ring:N star:LEAVES grid:RxC gnp:N:P");
  cmd->add_option("--seed", o.seed, "seed for generators, daemon and initial state");
}

inline void add_run_flags(CLI::App* cmd, InstanceOpts& o) {
  add_topology_flags(cmd, o);
  cmd->add_option("--byzantine", o.byzantine, "comma-separated byzantine node ids");
  cmd->add_option("--strategy", o.strategy,
                  "byzantine strategy: silent | random | oscillate:P[:T] | scripted:FILE");
  cmd->add_option("--daemon", o.daemon,
                  "daemon kind: random-fair | round-robin | adversarial | exhaustive");
  cmd->add_option("--fair-cap", o.fair_cap, "fairness cap K (0 = 4n)");
  cmd->add_option("--max-steps", o.max_steps, "step budget (0 = 20n^2)");
  cmd->add_option("--radius", o.radius, "containment radius c");
  cmd->add_option("--init", o.init, "initial configuration: random | exhaustive | FILE");
  cmd->add_option("--out", o.out, "output path");
}

inline Topology make_topology(const InstanceOpts& o) {
  if (!o.topology_file.empty() && !o.gen_spec.empty())
    throw UsageError("give either --topology or --gen, not both");
  if (!o.topology_file.empty()) {
    std::ifstream in(o.topology_file);
    if (!in) throw UsageError("cannot open topology file '" + o.topology_file + "'");
    return load_topology(in);
  }
  if (!o.gen_spec.empty()) return generate(o.gen_spec, o.seed);
  throw UsageError("a topology is required (--topology FILE or --gen SPEC)");
}

inline RunConfig make_run_config(const InstanceOpts& o) {
  RunConfig rc;
  rc.topo = make_topology(o);
  rc.faults = make_fault_model(rc.topo, parse_node_list(o.byzantine), o.strategy, o.seed);
  auto daemon = daemon_from_name(o.daemon);
  if (!daemon) throw UsageError("unknown daemon kind '" + o.daemon + "'");
  rc.daemon = *daemon;
  rc.seed = o.seed;
  rc.fair_cap = o.fair_cap;
  rc.max_steps = o.max_steps;
  rc.radius = o.radius;
  if (o.init == "random") {
    rc.init = InitKind::Random;
  } else if (o.init == "exhaustive") {
    rc.init = InitKind::Exhaustive;
  } else {
    std::ifstream in(o.init);
    if (!in) throw UsageError("cannot open initial configuration file '" + o.init + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') lines.push_back(line);
    rc.init = InitKind::Explicit;
    rc.init_config = parse_configuration(rc.topo, lines);
  }
  return rc;
}

inline std::string opt_step(const std::optional<std::uint64_t>& v) {
  return v ? "at step " + std::to_string(*v) : "intact";
}

inline void print_summary(std::ostream& out, const RunConfig& rc, const Summary& s) {
  out << "steps: " << s.steps << "/" << effective_max_steps(rc)
      << (s.quiesced ? " (quiesced)" : "") << "\n";
  out << "converged: " << (s.converged ? "yes" : "no") << "\n";
  if (s.first_contained2)
    out << "first 2-contained configuration: " << *s.first_contained2 << "\n";
  out << "closure c=1: " << opt_step(s.closure_violation_c1) << "\n";
  out << "closure c=2: " << opt_step(s.closure_violation_c2) << "\n";
  out << "final contained at c=" << rc.radius << ": "
      << (s.final_contained_at_radius ? "yes" : "no") << "\n";
  out << "gstar: |V*|=" << s.gstar_final.vstar.size() << " matched=";
  for (std::size_t i = 0; i < s.gstar_final.matched.size(); ++i)
    out << (i ? "," : "") << "(" << s.gstar_final.matched[i].first << ","
        << s.gstar_final.matched[i].second << ")";
  if (s.gstar_final.matched.empty()) out << "-";
  out << " matching=" << (s.gstar_final.is_matching ? "yes" : "no")
      << " maximal=" << (s.gstar_final.is_maximal ? "yes" : "no") << "\n";
  out << "final potential: " << s.final_potential << "\n";
}

inline bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

}  // namespace cli_detail

// Entry point behind the binary; takes argv without the program name.
// Exit codes: 0 success and checks pass, 1 check failure, 2 usage error.
inline int cli(const std::vector<std::string>& args) {
  using namespace cli_detail;

  CLI::App app{"simulator and checker for a strictly stabilizing maximal-matching "
               "protocol under byzantine faults"};
  app.require_subcommand(1);

  InstanceOpts sim_opts, camp_opts, exp_opts, cex_opts, gen_opts;
  std::uint64_t camp_runs = 100;
  double camp_min_convergence = 1.0;
  std::uint64_t exp_bound = 1u << 20;
  std::string exp_dump;
  std::string validate_path;

  CLI::App* sim = app.add_subcommand("simulate", "run one seeded execution");
  add_run_flags(sim, sim_opts);

  CLI::App* camp = app.add_subcommand("campaign", "run a multi-seed campaign");
  add_run_flags(camp, camp_opts);
  camp->add_option("--runs", camp_runs, "number of seeds");
  camp->add_option("--min-convergence", camp_min_convergence,
                   "minimum convergence rate for exit code 0");

  CLI::App* exp = app.add_subcommand(
      "explore", "exhaustively check closure and convergence on a tiny instance");
  add_topology_flags(exp, exp_opts);
  exp->add_option("--byzantine", exp_opts.byzantine, "comma-separated byzantine node ids");
  exp->add_option("--radius", exp_opts.radius, "containment radius c");
  exp->add_option("--bound", exp_bound, "maximum admissible state count");
  exp->add_option("--dump", exp_dump, "write the transition graph to this file");

  CLI::App* cex = app.add_subcommand(
      "counterexample", "reproduce the radius-optimality scenario on the 3-path");
  cex->add_option("--out", cex_opts.out, "write the trace to this file");

  CLI::App* gen = app.add_subcommand("gen-topology", "generate a topology file");
  add_topology_flags(gen, gen_opts);
  gen->add_option("--out", gen_opts.out, "output file (default: stdout)");

  CLI::App* val = app.add_subcommand("validate-trace", "replay-check a trace file");
  val->add_option("trace", validate_path, "trace file (JSON Lines)")->required();

  std::vector<const char*> argv;
  argv.push_back("ssmm");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) {
      RunConfig rc = make_run_config(sim_opts);
      if (rc.init == InitKind::Exhaustive)
        throw UsageError("--init exhaustive is a campaign mode; use `campaign`");
      rc.record = !sim_opts.out.empty();
      RunResult rr = simulate(rc);
      print_summary(std::cout, rc, rr.summary);
      if (!sim_opts.out.empty()) {
        if (!write_file(sim_opts.out, trace_to_jsonl(rc, rr)))
          throw UsageError("cannot write trace to '" + sim_opts.out + "'");
        std::cout << "trace: " << sim_opts.out << "\n";
      }
      bool radius_closure_ok =
          rc.radius <= 1 ? !rr.summary.closure_violation_c1.has_value()
                         : !rr.summary.closure_violation_c2.has_value();
      return (rr.summary.converged && radius_closure_ok) ? 0 : 1;
    }

    if (camp->parsed()) {
      RunConfig rc = make_run_config(camp_opts);
      CampaignResult cr = rc.init == InitKind::Exhaustive ? campaign_exhaustive(rc)
                                                          : campaign(rc, camp_runs);
      std::cout << "runs: " << cr.runs << "\n";
      std::cout << "converged: " << cr.converged << " ("
                << static_cast<std::uint64_t>(cr.convergence_rate() * 100.0) << "%)\n";
      std::cout << "closure violations: c=1: " << cr.closure_violations_c1
                << ", c=2: " << cr.closure_violations_c2 << "\n";
      if (cr.max_first_contained2)
        std::cout << "max steps to 2-containment: " << *cr.max_first_contained2 << "\n";
      if (!camp_opts.out.empty()) {
        using nlohmann::json;
        std::string lines;
        for (std::size_t i = 0; i < cr.summaries.size(); ++i) {
          const Summary& s = cr.summaries[i];
          json j;
          j["run"] = i;
          j["steps"] = s.steps;
          j["converged"] = s.converged;
          j["first_contained2"] = trace::opt_to_json(s.first_contained2);
          j["closure_c1"] = trace::opt_to_json(s.closure_violation_c1);
          j["closure_c2"] = trace::opt_to_json(s.closure_violation_c2);
          j["final_potential"] = s.final_potential;
          lines += j.dump();
          lines += "\n";
        }
        if (!write_file(camp_opts.out, lines))
          throw UsageError("cannot write campaign report to '" + camp_opts.out + "'");
      }
      bool radius_closure_ok = camp_opts.radius <= 1 ? cr.closure_violations_c1 == 0
                                                     : cr.closure_violations_c2 == 0;
      return (radius_closure_ok && cr.convergence_rate() >= camp_min_convergence) ? 0 : 1;
    }

    if (exp->parsed()) {
      Topology topo = make_topology(exp_opts);
      auto byz = parse_node_list(exp_opts.byzantine);
      BuildOptions opts;
      opts.bound = exp_bound;
      TransitionGraph tg = build(topo, byz, opts);
      auto violations = check_closure(tg, exp_opts.radius);
      auto verdict = check_convergence(tg, exp_opts.radius);
      std::uint64_t transition_count = 0;
      for (const auto& ts : tg.transitions) transition_count += ts.size();
      std::cout << "states: " << tg.num_states << "\n";
      std::cout << "transitions: " << transition_count << "\n";
      std::cout << "sccs: " << verdict.scc_count
                << " (terminal: " << verdict.terminal_sccs.size() << ")\n";
      std::cout << "closure violations at c=" << exp_opts.radius << ": "
                << violations.size() << "\n";
      std::cout << "convergence verdict at c=" << exp_opts.radius << ": "
                << (verdict.holds ? "holds" : "FAILS") << " (bad terminal sccs: "
                << verdict.bad_terminal_sccs << ", states without path to containment: "
                << verdict.states_without_path_to_contained << ")\n";
      if (!exp_dump.empty()) {
        std::ofstream out(exp_dump);
        if (!out) throw UsageError("cannot write graph dump to '" + exp_dump + "'");
        dump_graph(tg, out);
      }
      return (violations.empty() && verdict.holds) ? 0 : 1;
    }

    if (cex->parsed()) {
      Topology topo = generate_path(3);
      CounterexampleScenario sc = counterexample_script(topo);
      RunConfig rc;
      rc.topo = topo;
      rc.faults = sc.faults;
      rc.daemon = DaemonKind::RandomFair;
      rc.seed = 1;
      rc.init = InitKind::Explicit;
      rc.init_config = sc.initial;
      rc.max_steps = 2;
      rc.radius = 2;
      rc.record = true;
      RunResult rr = simulate(rc);

      bool initial_ok = true;
      for (NodeId v = 0; v < 3; ++v)
        initial_ok = initial_ok && satisfies_spec(topo, rr.initial, v);
      const Summary& s = rr.summary;
      bool c1_broken_at_divorce = s.closure_violation_c1 == std::optional<std::uint64_t>(0);
      bool c2_intact = !s.closure_violation_c2.has_value();
      bool violator_is_far_node =
          !rr.steps.empty() && rr.steps[0].cont1.violators == std::vector<NodeId>{sc.far};

      std::cout << "scenario: byzantine " << sc.byz << " married to " << sc.middle
                << ", node " << sc.far << " dead; every node initially legitimate: "
                << (initial_ok ? "yes" : "NO") << "\n";
      std::cout << "byzantine divorce at step 0\n";
      std::cout << "closure c=1: " << opt_step(s.closure_violation_c1);
      if (!rr.steps.empty() && !rr.steps[0].cont1.violators.empty()) {
        std::cout << " (violators:";
        for (NodeId v : rr.steps[0].cont1.violators) std::cout << " " << v;
        std::cout << ", distance " << topo.distance(rr.steps[0].cont1.violators[0], sc.byz)
                  << " from the byzantine node)";
      }
      std::cout << "\n";
      std::cout << "closure c=2: " << opt_step(s.closure_violation_c2) << "\n";
      if (!cex_opts.out.empty()) {
        if (!write_file(cex_opts.out, trace_to_jsonl(rc, rr)))
          throw UsageError("cannot write trace to '" + cex_opts.out + "'");
        std::cout << "trace: " << cex_opts.out << "\n";
      }
      bool reproduced = initial_ok && c1_broken_at_divorce && c2_intact && violator_is_far_node;
      std::cout << "radius-1 containment refuted, radius-2 containment intact: "
                << (reproduced ? "yes" : "NO") << "\n";
      return reproduced ? 0 : 1;
    }

    if (gen->parsed()) {
      Topology topo = make_topology(gen_opts);
      if (gen_opts.out.empty()) {
        save_topology(topo, std::cout);
      } else {
        std::ostringstream buf;
        save_topology(topo, buf);
        if (!write_file(gen_opts.out, buf.str()))
          throw UsageError("cannot write topology to '" + gen_opts.out + "'");
      }
      return 0;
    }

    if (val->parsed()) {
      std::ifstream in(validate_path, std::ios::binary);
      if (!in) throw UsageError("cannot open trace file '" + validate_path + "'");
      TraceValidation res = validate_trace(in);
      if (res.ok) {
        std::cout << "trace ok\n";
        return 0;
      }
      std::cout << "invalid trace: " << res.error << "\n";
      return 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace ssmm
