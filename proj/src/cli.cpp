#include "cpv/cli.hpp"

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cpv/io.hpp"
#include "cpv/privacy.hpp"
#include "cpv/search.hpp"
#include "cpv/tatonnement.hpp"

namespace cpv {

using nlohmann::json;

namespace {

struct Options {
  bool pretty = false;
  std::string instance, protocol, property, emit, emit_protocol, profile, queries = "elicit", name, params = "{}",
                                                                          phase;
  std::size_t max_states = 200000;
  int max_depth = 64;
  double max_seconds = 30.0;
  bool osp = false, no_memo = false, no_minimize = false, list = false;
};

void render(std::ostream& out, const json& v, int indent) {
  std::string pad(indent, ' ');
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (it->is_structured() && !it->empty()) {
        out << pad << it.key() << ":\n";
        render(out, *it, indent + 2);
      } else {
        out << pad << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << "\n";
      }
    }
  } else if (v.is_array()) {
    auto simple = [](const json& e) {
      if (e.is_object()) return e.empty();
      if (e.is_array()) return std::none_of(e.begin(), e.end(), [](const json& x) { return x.is_structured(); });
      return true;
    };
    bool flat = std::all_of(v.begin(), v.end(), simple);
    if (flat) {
      for (const auto& e : v) out << pad << "- " << (e.is_string() ? e.get<std::string>() : e.dump()) << "\n";
    } else {
      for (const auto& e : v) {
        out << pad << "-\n";
        render(out, e, indent + 2);
      }
    }
  } else {
    out << pad << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
}

void emit_report(std::ostream& out, const json& report, bool pretty) {
  if (pretty)
    render(out, report, 0);
  else
    out << report.dump() << "\n";
}

json agent_num(int i) { return i + 1; }

json violation_json(const ChoiceRule& rule, const Violation& v, bool component) {
  const TypeSpace& s = rule.space();
  json j;
  j["agent"] = agent_num(v.agent);
  j["types"] = json::array({s.label(v.agent, v.type_a), s.label(v.agent, v.type_b)});
  j["profiles"] = json::array({profile_json(s, v.profile_a), profile_json(s, v.profile_b)});
  j["leaves"] = json::array({v.leaf_a, v.leaf_b});
  if (component)
    j["component"] = rule.component_label(v.agent, v.outcome);
  else
    j["outcome"] = rule.outcome_label(v.outcome);
  return j;
}

json witness_json(const TypeSpace& s, const Witness& w) {
  json f = json::array();
  for (int i = 0; i < s.agents(); ++i) {
    json a = json::array();
    for (int t : w.factors[i]) a.push_back(s.label(i, t));
    f.push_back(a);
  }
  return {{"factors", f}, {"text", format_factors(s, w.factors)}};
}

json cp_json(const ChoiceRule& rule, const CpVerdict& v, bool component) {
  json j;
  j["holds"] = v.holds;
  if (v.violation) {
    j["violation"] = violation_json(rule, *v.violation, component);
    json all = json::array();
    for (const auto& x : v.per_agent) all.push_back(violation_json(rule, x, component));
    j["violations_by_agent"] = all;
  }
  return j;
}

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad node id '" + item + "'");
    }
  }
  return out;
}

LoadedProtocol need_protocol(const Options& o, const Instance& inst) {
  if (o.protocol.empty()) throw InputError("this command needs a protocol file");
  return protocol_from_json(read_json_file(o.protocol), inst.rule.space());
}

json query_summary(const Protocol& p) {
  json qs = json::array();
  for (int v = 0; v < p.size(); ++v) {
    if (p.is_leaf(v)) continue;
    auto c = classify_query(p, v);
    json q{{"node", v}, {"class", class_name(c)}};
    if (c.agent >= 0) q["agent"] = agent_num(c.agent);
    if (c.arity > 0) q["arity"] = c.arity;
    if (c.cap_reached) q["cap_reached"] = true;
    qs.push_back(q);
  }
  return qs;
}

int cmd_validate(const Options& o, json& r) {
  Instance inst = instance_from_json(read_json_file(o.instance));
  const TypeSpace& s = inst.rule.space();
  r["valid"] = true;
  r["agents"] = s.agents();
  r["profiles"] = s.support().count();
  r["outcomes"] = inst.rule.outcome_count();
  r["model"] = domain_name(inst.model.kind);
  if (!o.protocol.empty()) {
    LoadedProtocol lp = need_protocol(o, inst);
    r["nodes"] = lp.protocol.size();
    r["leaves"] = lp.protocol.leaves().size();
    r["queries"] = query_summary(lp.protocol);
    auto im = implements(lp.protocol, inst.rule);
    r["implements"] = im.holds;
    if (!im.holds) r["implements_failure"] = {{"leaf", im.leaf}, {"profiles", json::array({profile_json(s, im.first), profile_json(s, im.second)})}};
    if (lp.phase) {
      auto ph = validate_phase(lp.protocol, *lp.phase);
      r["phase"] = {{"ok", ph.ok}, {"initial", ph.initial}, {"end", ph.end}};
      if (!ph.ok) r["phase"]["defect"] = ph.defect;
    }
  }
  return 0;
}

int cmd_check(const Options& o, json& r) {
  Instance inst = instance_from_json(read_json_file(o.instance));
  const ChoiceRule& rule = inst.rule;
  const TypeSpace& s = rule.space();
  const std::string& prop = o.property;
  r["property"] = prop;
  auto finish = [&](bool holds) {
    r["holds"] = holds;
    return holds ? 0 : 1;
  };
  if (prop == "cp" || prop == "icp") {
    LoadedProtocol lp = need_protocol(o, inst);
    require_implements(lp.protocol, rule);
    auto v = prop == "cp" ? check_protocol_cp(lp.protocol, rule) : check_protocol_icp(lp.protocol, rule);
    r.update(cp_json(rule, v, prop == "icp"));
    return finish(v.holds);
  }
  if (prop == "gcp") {
    LoadedProtocol lp = need_protocol(o, inst);
    require_implements(lp.protocol, rule);
    auto v = check_protocol_gcp(lp.protocol, rule);
    if (v.pair)
      r["violation"] = {{"leaves", json::array({v.pair->first, v.pair->second})}, {"node", v.node}};
    return finish(v.holds);
  }
  if (prop == "tatonnement") {
    LoadedProtocol lp = need_protocol(o, inst);
    require_implements(lp.protocol, rule);
    std::optional<std::vector<int>> phase = lp.phase;
    if (!o.phase.empty()) phase = parse_ids(o.phase);
    bool discovered = false;
    if (!phase) {
      phase = phase_discovery(lp.protocol, rule);
      discovered = true;
    }
    if (!phase) {
      r["reason"] = "no phase with disjoint end outcome sets";
      return finish(false);
    }
    r["phase"] = *phase;
    r["discovered"] = discovered;
    auto v = check_tatonnement(lp.protocol, rule, *phase);
    r["end"] = v.end;
    r["disjoint"] = v.disjoint;
    if (!v.disjoint) r["overlap"] = json::array({v.overlap_a, v.overlap_b});
    if (v.failing_subtree >= 0) r["failing_subtree"] = v.failing_subtree;
    if (v.violation) r["violation"] = violation_json(rule, *v.violation, false);
    return finish(v.holds);
  }
  if (prop == "osp") {
    LoadedProtocol lp = need_protocol(o, inst);
    auto v = check_protocol_osp(lp.protocol, rule, inst.model);
    if (!v.holds)
      r["violation"] = {{"node", v.node},         {"agent", agent_num(v.agent)},  {"type", s.label(v.agent, v.type)},
                        {"truthful", v.truthful}, {"deviation", v.deviation}};
    return finish(v.holds);
  }
  if (prop == "corners") {
    auto v = corners_scan(rule);
    if (v) {
      json corners = json::array(), outs = json::array();
      for (auto k : v->corners) {
        corners.push_back(profile_json(s, k));
        outs.push_back(rule.outcome_label(rule.outcome(k)));
      }
      r["violation"] = {{"agents", json::array({agent_num(v->agent_i), agent_num(v->agent_j)})},
                        {"corners", corners},
                        {"outcomes", outs},
                        {"odd", v->odd},
                        {"outcome", rule.outcome_label(v->outcome)}};
    }
    return finish(!v);
  }
  if (prop == "nonbossy") {
    auto v = check_nonbossy(rule);
    if (!v.holds) {
      r["violation"] = {{"agent", agent_num(v.agent)},
                        {"types", json::array({s.label(v.agent, v.type_a), s.label(v.agent, v.type_b)})},
                        {"profiles", json::array({profile_json(s, v.profile_a), profile_json(s, v.profile_b)})}};
      if (v.other >= 0) r["violation"]["other"] = agent_num(v.other);
    }
    return finish(v.holds);
  }
  Property p = parse_property(prop);
  auto v = check_rule_property(rule, inst.model, p);
  if (!v.holds) {
    json j{{"profile", profile_json(s, v.profile)}, {"message", v.message},
           {"outcome", rule.outcome_label(rule.outcome(v.profile))}};
    if (v.agent >= 0) j["agent"] = agent_num(v.agent);
    if (v.other) j["other"] = profile_json(s, *v.other);
    if (v.object >= 0) j["object"] = inst.model.objects.at(v.object);
    r["violation"] = j;
  }
  return finish(v.holds);
}

int cmd_synth(const Options& o, json& r) {
  Instance inst = instance_from_json(read_json_file(o.instance));
  auto syn = synthesize_or_witness(inst.rule, !o.no_minimize);
  if (syn.protocol) {
    json doc = protocol_to_json(*syn.protocol);
    r["status"] = "cp";
    r["protocol"] = doc;
    if (!o.emit.empty()) write_json_file(o.emit, doc);
    return 0;
  }
  r["status"] = "witness";
  r["witness"] = witness_json(inst.rule.space(), *syn.witness);
  if (syn.minimal) r["minimal"] = witness_json(inst.rule.space(), *syn.minimal);
  return 1;
}

int cmd_run(const Options& o, json& r) {
  Instance inst = instance_from_json(read_json_file(o.instance));
  LoadedProtocol lp = need_protocol(o, inst);
  const TypeSpace& s = inst.rule.space();
  std::vector<std::string> labels;
  std::stringstream ss(o.profile);
  std::string item;
  while (std::getline(ss, item, ',')) labels.push_back(item);
  std::size_t k = s.index(s.parse_profile(labels));
  if (!s.in_support(k)) throw InputError("profile outside the support");
  auto t = run_protocol(lp.protocol, k, &inst.rule);
  json steps = json::array();
  for (const auto& st : t.steps)
    steps.push_back({{"node", st.node}, {"query", st.query}, {"cell", st.cell}, {"answer", st.answer}, {"child", st.child}});
  r["profile"] = profile_json(s, k);
  r["steps"] = steps;
  r["leaf"] = t.leaf;
  if (t.outcome) r["outcome"] = inst.rule.outcome_label(*t.outcome);
  return 0;
}

int cmd_enumerate(const Options& o, json& r, std::ostream& err) {
  Instance inst = instance_from_json(read_json_file(o.instance));
  SearchBudget b;
  b.max_states = o.max_states;
  b.max_depth = o.max_depth;
  b.max_seconds = o.max_seconds;
  b.memo = !o.no_memo;
  SearchResult res;
  if (o.osp) {
    r["search"] = "osp";
    res = exhaustive_osp_search(inst.rule, inst.model, b);
  } else {
    QueryFamily f = parse_family(o.queries);
    r["search"] = "cp";
    r["queries"] = o.queries;
    res = exhaustive_cp_search(inst.rule, f, b);
  }
  r["status"] = status_name(res.status);
  r["states"] = res.states;
  if (!res.reason.empty()) r["reason"] = res.reason;
  err << "search: " << res.states << " states in " << res.seconds << " s\n";
  if (res.protocol) {
    json doc = protocol_to_json(*res.protocol);
    r["protocol"] = doc;
    if (!o.emit.empty()) write_json_file(o.emit, doc);
  }
  switch (res.status) {
    case SearchStatus::Found:
      return 0;
    case SearchStatus::Nonexistent:
      return 1;
    default:
      return 2;
  }
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

int cmd_builtin(const Options& o, json& r) {
  if (o.list) {
    r["rules"] = builtin_rule_names();
    r["families"] = builtin_family_names();
    r["protocols"] = builtin_protocol_names();
    return 0;
  }
  if (o.name.empty()) throw InputError("builtin needs a NAME or --list");
  json params = parse_json_text(o.params);
  if (!params.is_object()) throw InputError("--params must be a JSON object");
  r["name"] = o.name;
  if (contains(builtin_protocol_names(), o.name)) {
    auto bp = builtin_protocol(o.name, params);
    json inst = instance_to_json(bp.rule, bp.model);
    json prot = protocol_to_json(bp.protocol, bp.phase);
    r["kind"] = "protocol";
    r["instance"] = inst;
    r["protocol"] = prot;
    if (!o.emit.empty()) write_json_file(o.emit, inst);
    if (!o.emit_protocol.empty()) write_json_file(o.emit_protocol, prot);
    return 0;
  }
  if (contains(builtin_family_names(), o.name)) {
    json arr = json::array();
    for (const auto& b : builtin_family(o.name, params)) arr.push_back(instance_to_json(b.rule, b.model));
    r["kind"] = "family";
    r["instances"] = arr;
    if (!o.emit.empty()) write_json_file(o.emit, arr);
    return 0;
  }
  auto b = builtin_rule(o.name, params);
  json inst = instance_to_json(b.rule, b.model);
  r["kind"] = "rule";
  r["instance"] = inst;
  if (!o.emit.empty()) write_json_file(o.emit, inst);
  return 0;
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"schema", kSchema}, {"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Contextual privacy verifier and synthesizer", "cpv"};
  app.require_subcommand(1);
  app.add_flag("--pretty", o.pretty, "Human-readable report");

  auto* validate = app.add_subcommand("validate", "Load and validate an instance and optional protocol");
  validate->add_option("instance", o.instance, "Instance file")->required();
  validate->add_option("protocol", o.protocol, "Protocol file");

  auto* check = app.add_subcommand("check", "Check a property of a rule or protocol");
  check->add_option("instance", o.instance, "Instance file")->required();
  check->add_option("protocol", o.protocol, "Protocol file");
  check->add_option("--property", o.property, "Property to check")
      ->required()
      ->check(CLI::IsMember({"cp", "gcp", "icp", "tatonnement", "corners", "nonbossy", "efficient", "ir", "stable",
                             "sp", "osp"}));
  check->add_option("--phase", o.phase, "Comma-separated phase node ids (tatonnement)");

  auto* synth = app.add_subcommand("synth", "Synthesize a CP protocol or report a witness");
  synth->add_option("instance", o.instance, "Instance file")->required();
  synth->add_option("--emit", o.emit, "Write the protocol to FILE");
  synth->add_flag("--no-minimize", o.no_minimize, "Skip witness minimization");

  auto* run = app.add_subcommand("run", "Run a protocol on one profile");
  run->add_option("instance", o.instance, "Instance file")->required();
  run->add_option("protocol", o.protocol, "Protocol file")->required();
  run->add_option("--profile", o.profile, "Comma-separated type labels")->required();

  auto* enumerate = app.add_subcommand("enumerate", "Exhaustive protocol search");
  enumerate->add_option("instance", o.instance, "Instance file")->required();
  enumerate->add_option("--queries", o.queries, "elicit[,count|count:any][,multicount[:L]]");
  enumerate->add_option("--max-states", o.max_states, "State budget");
  enumerate->add_option("--max-depth", o.max_depth, "Depth budget");
  enumerate->add_option("--max-seconds", o.max_seconds, "Time budget");
  enumerate->add_flag("--osp", o.osp, "Search for an obviously strategyproof protocol instead");
  enumerate->add_flag("--no-memo", o.no_memo, "Disable the state cache");
  enumerate->add_option("--emit", o.emit, "Write the protocol to FILE");

  auto* builtin = app.add_subcommand("builtin", "Materialize a built-in rule, family or protocol");
  builtin->add_option("name", o.name, "Built-in name");
  builtin->add_option("--params", o.params, "JSON object of parameters");
  builtin->add_option("--emit", o.emit, "Write the instance (or family array) to FILE");
  builtin->add_option("--emit-protocol", o.emit_protocol, "Write the protocol to FILE");
  builtin->add_flag("--list", o.list, "List built-in names");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    emit_report(out, error_json("usage", e.what()), o.pretty);
    return 2;
  }

  json r;
  r["schema"] = kSchema;
  std::string name = app.get_subcommands().front()->get_name();
  r["command"] = name;
  try {
    int code = 0;
    if (name == "validate")
      code = cmd_validate(o, r);
    else if (name == "check")
      code = cmd_check(o, r);
    else if (name == "synth")
      code = cmd_synth(o, r);
    else if (name == "run")
      code = cmd_run(o, r);
    else if (name == "enumerate")
      code = cmd_enumerate(o, r, err);
    else
      code = cmd_builtin(o, r);
    emit_report(out, r, o.pretty);
    return code;
  } catch (const ParseError& e) {
    json j = error_json("parse", e.what());
    j["error"]["line"] = e.line;
    j["error"]["column"] = e.column;
    err << "error: " << e.what() << "\n";
    emit_report(out, j, o.pretty);
  } catch (const SchemaError& e) {
    json j = error_json("schema", e.what());
    j["error"]["pointer"] = e.pointer;
    err << "error: " << e.what() << "\n";
    emit_report(out, j, o.pretty);
  } catch (const ProtocolDefect& e) {
    json j = error_json("defect", e.what());
    j["error"]["defect"] = e.report.kind;
    j["error"]["node"] = "/tree/" + std::to_string(e.report.node);
    j["error"]["path"] = e.report.path;
    err << "error: " << e.what() << "\n";
    emit_report(out, j, o.pretty);
  } catch (const NotImplemented& e) {
    json j = error_json("not-implemented", e.what());
    j["error"]["leaf"] = e.leaf;
    err << "error: " << e.what() << "\n";
    emit_report(out, j, o.pretty);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    emit_report(out, error_json("input", e.what()), o.pretty);
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    emit_report(out, error_json("resource", e.what()), o.pretty);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    emit_report(out, error_json("precondition", e.what()), o.pretty);
  }
  return 2;
}

}  // namespace cpv
