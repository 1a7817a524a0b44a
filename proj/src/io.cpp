#include "cpv/io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cpv {

using nlohmann::json;

namespace {

std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

const json& need(const json& obj, const std::string& base, const char* key) {
  if (!obj.is_object()) throw SchemaError(base.empty() ? "/" : base, "expected an object");
  if (!obj.contains(key)) throw SchemaError(ptr(base, key), "missing field");
  return obj.at(key);
}

const json& need_array(const json& v, const std::string& at) {
  if (!v.is_array()) throw SchemaError(at, "expected an array");
  return v;
}

std::string need_string(const json& v, const std::string& at) {
  if (!v.is_string()) throw SchemaError(at, "expected a string");
  return v.get<std::string>();
}

int need_int(const json& v, const std::string& at) {
  if (!v.is_number_integer()) throw SchemaError(at, "expected an integer");
  return v.get<int>();
}

std::vector<std::string> strings(const json& v, const std::string& at) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < need_array(v, at).size(); ++j) out.push_back(need_string(v[j], ptr(at, j)));
  return out;
}

int type_of(const TypeSpace& s, int agent, const json& v, const std::string& at) {
  auto l = need_string(v, at);
  auto t = s.find(agent, l);
  if (!t) throw SchemaError(at, "unknown type '" + l + "' for agent " + std::to_string(agent + 1));
  return *t;
}

std::size_t profile_of(const TypeSpace& s, const json& v, const std::string& at) {
  need_array(v, at);
  if (static_cast<int>(v.size()) != s.agents()) throw SchemaError(at, "profile has the wrong number of agents");
  Profile p;
  for (int i = 0; i < s.agents(); ++i) p.push_back(type_of(s, i, v[i], ptr(at, i)));
  return s.index(p);
}

int object_of(const DomainModel& m, const json& v, const std::string& at) {
  if (v.is_null()) return -1;
  auto name = need_string(v, at);
  for (std::size_t c = 0; c < m.objects.size(); ++c)
    if (m.objects[c] == name) return static_cast<int>(c);
  throw SchemaError(at, "unknown object '" + name + "'");
}

int outcome_of(const std::vector<std::string>& labels, const json& v, const std::string& at) {
  if (v.is_number_integer()) {
    int x = v.get<int>();
    if (x < 0 || x >= static_cast<int>(labels.size())) throw SchemaError(at, "outcome id out of range");
    return x;
  }
  auto l = need_string(v, at);
  for (std::size_t x = 0; x < labels.size(); ++x)
    if (labels[x] == l) return static_cast<int>(x);
  throw SchemaError(at, "unknown outcome '" + l + "'");
}

TypeSpace space_from_json(const json& doc) {
  int n = need_int(need(doc, "", "agents"), "/agents");
  if (n < 1) throw SchemaError("/agents", "need at least one agent");
  const json& types = need_array(need(doc, "", "types"), "/types");
  std::vector<std::vector<std::string>> alpha;
  if (!types.empty() && types[0].is_string()) {
    alpha.assign(n, strings(types, "/types"));
  } else {
    if (static_cast<int>(types.size()) != n) throw SchemaError("/types", "expected one alphabet per agent");
    for (int i = 0; i < n; ++i) alpha.push_back(strings(types[i], ptr("/types", i)));
  }
  for (int i = 0; i < n; ++i) {
    if (alpha[i].empty()) throw SchemaError(ptr("/types", i), "empty alphabet");
    std::set<std::string> seen(alpha[i].begin(), alpha[i].end());
    if (seen.size() != alpha[i].size()) throw SchemaError(ptr("/types", i), "repeated type label");
  }
  TypeSpace s(alpha);
  if (doc.contains("support")) {
    const json& sup = need_array(doc["support"], "/support");
    ProfileSet keep = s.empty_set();
    for (std::size_t j = 0; j < sup.size(); ++j) keep.set(profile_of(s, sup[j], ptr("/support", j)));
    if (keep.none()) throw SchemaError("/support", "empty support");
    s = s.restricted(keep);
  }
  return s;
}

DomainModel model_from_json(const json& m, const TypeSpace& s, const std::vector<std::string>& outcomes) {
  const std::string base = "/model";
  DomainModel d;
  d.kind = parse_domain(need_string(need(m, base, "kind"), ptr(base, "kind")));
  if (m.contains("objects")) d.objects = strings(m["objects"], ptr(base, "objects"));
  auto per_type = [&](const char* key, auto&& fn) {
    if (!m.contains(key)) return;
    std::string at = ptr(base, key);
    const json& a = need_array(m[key], at);
    if (static_cast<int>(a.size()) != s.agents()) throw SchemaError(at, "expected one entry per agent");
    for (int i = 0; i < s.agents(); ++i) {
      const json& row = need_array(a[i], ptr(at, i));
      if (static_cast<int>(row.size()) != s.size(i)) throw SchemaError(ptr(at, i), "expected one entry per type");
      for (int t = 0; t < s.size(i); ++t) fn(i, t, row[t], ptr(ptr(at, i), t));
    }
  };
  d.preferences.assign(m.contains("preferences") ? s.agents() : 0, {});
  per_type("preferences", [&](int i, int, const json& v, const std::string& at) {
    std::vector<int> pref;
    for (std::size_t j = 0; j < need_array(v, at).size(); ++j) pref.push_back(object_of(d, v[j], ptr(at, j)));
    d.preferences[i].push_back(pref);
  });
  d.scores.assign(m.contains("scores") ? s.agents() : 0, {});
  per_type("scores", [&](int i, int, const json& v, const std::string& at) {
    if (need_array(v, at).size() != d.objects.size()) throw SchemaError(at, "expected one score per object");
    std::vector<Rational> row;
    for (std::size_t j = 0; j < v.size(); ++j) row.push_back(rational_from_json(v[j], ptr(at, j)));
    d.scores[i].push_back(row);
  });
  d.values.assign(m.contains("values") ? s.agents() : 0, {});
  per_type("values", [&](int i, int, const json& v, const std::string& at) {
    d.values[i].push_back(rational_from_json(v, at));
  });
  d.outcome_ranking.assign(m.contains("outcome_ranking") ? s.agents() : 0, {});
  per_type("outcome_ranking", [&](int i, int, const json& v, const std::string& at) {
    std::vector<int> r;
    for (std::size_t j = 0; j < need_array(v, at).size(); ++j) r.push_back(outcome_of(outcomes, v[j], ptr(at, j)));
    d.outcome_ranking[i].push_back(r);
  });
  if (m.contains("endowment")) {
    std::string at = ptr(base, "endowment");
    const json& e = need_array(m["endowment"], at);
    if (static_cast<int>(e.size()) != s.agents()) throw SchemaError(at, "expected one entry per agent");
    for (std::size_t j = 0; j < e.size(); ++j)
      d.endowment.push_back(e[j].is_number_integer() ? e[j].get<int>() : object_of(d, e[j], ptr(at, j)));
  }
  if (m.contains("capacity")) {
    std::string at = ptr(base, "capacity");
    const json& c = need_array(m["capacity"], at);
    if (c.size() != d.objects.size()) throw SchemaError(at, "expected one capacity per object");
    for (std::size_t j = 0; j < c.size(); ++j) d.capacity.push_back(need_int(c[j], ptr(at, j)));
  }
  if (m.contains("units")) d.units = need_int(m["units"], ptr(base, "units"));
  return d;
}

json model_to_json(const DomainModel& d, const TypeSpace& s, const ChoiceRule& rule) {
  json m;
  m["kind"] = domain_name(d.kind);
  if (d.kind == DomainKind::None) return m;
  if (!d.objects.empty()) m["objects"] = d.objects;
  auto name = [&](int c) { return c < 0 ? json(nullptr) : json(d.objects.at(c)); };
  if (!d.preferences.empty()) {
    json a = json::array();
    for (int i = 0; i < s.agents(); ++i) {
      json row = json::array();
      for (const auto& pref : d.preferences[i]) {
        json p = json::array();
        for (int c : pref) p.push_back(name(c));
        row.push_back(p);
      }
      a.push_back(row);
    }
    m["preferences"] = a;
  }
  if (!d.scores.empty()) {
    json a = json::array();
    for (const auto& agent : d.scores) {
      json row = json::array();
      for (const auto& t : agent) {
        json r = json::array();
        for (const auto& x : t) r.push_back(rational_json(x));
        row.push_back(r);
      }
      a.push_back(row);
    }
    m["scores"] = a;
  }
  if (!d.values.empty()) {
    json a = json::array();
    for (const auto& agent : d.values) {
      json row = json::array();
      for (const auto& x : agent) row.push_back(rational_json(x));
      a.push_back(row);
    }
    m["values"] = a;
  }
  if (!d.outcome_ranking.empty()) {
    json a = json::array();
    for (const auto& agent : d.outcome_ranking) {
      json row = json::array();
      for (const auto& r : agent) {
        json l = json::array();
        for (int x : r) l.push_back(rule.outcome_label(x));
        row.push_back(l);
      }
      a.push_back(row);
    }
    m["outcome_ranking"] = a;
  }
  if (!d.endowment.empty()) {
    json e = json::array();
    for (int c : d.endowment) e.push_back(d.kind == DomainKind::House ? name(c) : json(c));
    m["endowment"] = e;
  }
  if (!d.capacity.empty()) m["capacity"] = d.capacity;
  if (d.kind == DomainKind::Auction) m["units"] = d.units;
  return m;
}

}  // namespace

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t j = 0; j < end; ++j) {
      if (text[j] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col), line, col);
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << doc.dump(2) << "\n";
}

json rational_json(const Rational& r) {
  if (r.den() == 1) return json(r.num());
  return json(r.str());
}

Rational rational_from_json(const json& v, const std::string& at) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  std::optional<Rational> r;
  if (v.is_number()) r = Rational::parse(v.dump());
  if (v.is_string()) r = Rational::parse(v.get<std::string>());
  if (!r) throw SchemaError(at, "expected a number");
  return *r;
}

json profile_json(const TypeSpace& space, std::size_t index) {
  json p = json::array();
  for (int i = 0; i < space.agents(); ++i) p.push_back(space.label(i, space.coord(index, i)));
  return p;
}

Instance instance_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("/", "expected an object");
  if (doc.contains("schema") && doc["schema"] != kSchema)
    throw SchemaError("/schema", std::string("unsupported schema, expected ") + kSchema);
  const json& rj = need(doc, "", "rule");
  if (!rj.is_object()) throw SchemaError("/rule", "expected an object");
  Instance inst;
  if (rj.contains("builtin")) {
    std::string name = need_string(rj["builtin"], "/rule/builtin");
    json params = rj.contains("params") ? rj["params"] : json::object();
    if (!params.is_object()) throw SchemaError("/rule/params", "expected an object");
    std::optional<TypeSpace> space;
    if (doc.contains("types")) space = space_from_json(doc);
    Builtin b = builtin_rule(name, params, space);
    inst.rule = std::move(b.rule);
    inst.model = std::move(b.model);
  } else {
    TypeSpace s = space_from_json(doc);
    const json& outs = need_array(need(doc, "", "outcomes"), "/outcomes");
    if (outs.empty()) throw SchemaError("/outcomes", "no outcomes");
    std::vector<std::string> labels;
    for (std::size_t x = 0; x < outs.size(); ++x) {
      std::string at = ptr("/outcomes", x);
      labels.push_back(outs[x].is_object() ? need_string(need(outs[x], at, "label"), ptr(at, "label"))
                                           : need_string(outs[x], at));
    }
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
      throw SchemaError("/outcomes", "repeated outcome label");
    const json& table = need_array(need(rj, "/rule", "table"), "/rule/table");
    std::vector<int> t(s.profile_count(), -1);
    for (std::size_t r = 0; r < table.size(); ++r) {
      std::string at = ptr("/rule/table", r);
      const json& row = need_array(table[r], at);
      if (static_cast<int>(row.size()) != s.agents() + 1) throw SchemaError(at, "row needs one label per agent and an outcome");
      json prof(row.begin(), row.end() - 1);
      std::size_t k = profile_of(s, prof, at);
      if (!s.in_support(k)) throw SchemaError(at, "profile outside the support");
      if (t[k] >= 0) throw SchemaError(at, "profile listed twice");
      t[k] = outcome_of(labels, row.back(), ptr(at, row.size() - 1));
    }
    s.support().for_each([&](std::size_t k) {
      if (t[k] < 0) throw SchemaError("/rule/table", "no row for profile " + s.profile_label(k));
    });
    inst.rule = ChoiceRule(s, labels, t);
  }
  const TypeSpace& s = inst.rule.space();
  if (doc.contains("model")) inst.model = model_from_json(doc["model"], s, inst.rule.outcome_labels());
  if (!rj.contains("builtin")) {
    const json& outs = doc["outcomes"];
    bool any = false, all = true;
    for (const auto& o : outs) {
      bool has = o.is_object() && o.contains("shares");
      any = any || has;
      all = all && has;
    }
    if (any && !all) throw SchemaError("/outcomes", "either every outcome or none carries shares");
    if (all) {
      std::vector<Allocation> allocs;
      for (std::size_t x = 0; x < outs.size(); ++x) {
        std::string at = ptr(ptr("/outcomes", x), "shares");
        const json& sh = need_array(outs[x]["shares"], at);
        if (static_cast<int>(sh.size()) != s.agents()) throw SchemaError(at, "expected one share per agent");
        Allocation a;
        if (outs[x].contains("tag")) a.tag = need_string(outs[x]["tag"], ptr(ptr("/outcomes", x), "tag"));
        for (std::size_t i = 0; i < sh.size(); ++i) {
          std::string ai = ptr(at, i);
          Share share;
          if (sh[i].contains("item")) share.item = object_of(inst.model, sh[i]["item"], ptr(ai, "item"));
          if (sh[i].contains("pay")) share.pay = rational_from_json(sh[i]["pay"], ptr(ai, "pay"));
          a.shares.push_back(share);
        }
        allocs.push_back(a);
      }
      inst.rule.set_allocations(allocs);
    }
  }
  if (doc.contains("components")) {
    const json& c = need_array(doc["components"], "/components");
    if (static_cast<int>(c.size()) != s.agents()) throw SchemaError("/components", "expected one list per agent");
    std::vector<std::vector<std::string>> comp_labels(s.agents());
    std::vector<std::vector<int>> per(s.agents(), std::vector<int>(s.profile_count(), -1));
    for (int i = 0; i < s.agents(); ++i) {
      auto names = strings(c[i], ptr("/components", i));
      if (static_cast<int>(names.size()) != inst.rule.outcome_count())
        throw SchemaError(ptr("/components", i), "expected one component per outcome");
      std::map<std::string, int> id;
      for (const auto& nm : names)
        if (id.emplace(nm, static_cast<int>(id.size())).second) comp_labels[i].push_back(nm);
      s.support().for_each([&](std::size_t k) { per[i][k] = id[names[inst.rule.outcome(k)]]; });
    }
    try {
      inst.rule.set_components(comp_labels, per);
    } catch (const InputError& e) {
      throw SchemaError("/components", e.what());
    }
  }
  return inst;
}

json instance_to_json(const ChoiceRule& rule, const DomainModel& model) {
  const TypeSpace& s = rule.space();
  json doc;
  doc["schema"] = kSchema;
  doc["agents"] = s.agents();
  doc["types"] = s.alphabets();
  if (!s.full_support()) {
    json sup = json::array();
    s.support().for_each([&](std::size_t k) { sup.push_back(profile_json(s, k)); });
    doc["support"] = sup;
  }
  json outs = json::array();
  for (int x = 0; x < rule.outcome_count(); ++x) {
    if (!rule.has_allocations()) {
      outs.push_back(rule.outcome_label(x));
      continue;
    }
    const Allocation& a = rule.allocation(x);
    json o;
    o["label"] = rule.outcome_label(x);
    json shares = json::array();
    for (const auto& sh : a.shares) {
      json j;
      j["item"] = sh.item < 0 ? json(nullptr) : json(model.objects.at(sh.item));
      j["pay"] = rational_json(sh.pay);
      shares.push_back(j);
    }
    o["shares"] = shares;
    if (!a.tag.empty()) o["tag"] = a.tag;
    outs.push_back(o);
  }
  doc["outcomes"] = outs;
  json table = json::array();
  s.support().for_each([&](std::size_t k) {
    json row = profile_json(s, k);
    row.push_back(rule.outcome_label(rule.outcome(k)));
    table.push_back(row);
  });
  doc["rule"] = {{"table", table}};
  if (rule.has_components()) {
    json c = json::array();
    for (int i = 0; i < s.agents(); ++i) {
      json row = json::array();
      for (int x = 0; x < rule.outcome_count(); ++x) {
        int id = rule.component_of_outcome(i, x);
        row.push_back(id < 0 ? std::string("-") : rule.component_label(i, id));
      }
      c.push_back(row);
    }
    doc["components"] = c;
  }
  if (model.kind != DomainKind::None) doc["model"] = model_to_json(model, s, rule);
  return doc;
}

namespace {

// Profiles of the full product that a query cell admits.
ProfileSet cell_set(const TypeSpace& s, const json& q, const std::string& kind, const json& cell,
                    const std::vector<int>& subset_members, const std::string& at, int agent,
                    const std::vector<std::vector<int>>& subsets) {
  ProfileSet out = s.empty_set();
  const int n = s.agents();
  if (kind == "elicit") {
    std::vector<char> in(s.size(agent), 0);
    for (std::size_t j = 0; j < need_array(cell, at).size(); ++j) in[type_of(s, agent, cell[j], ptr(at, j))] = 1;
    for (std::size_t k = 0; k < s.profile_count(); ++k)
      if (in[s.coord(k, agent)]) out.set(k);
  } else if (kind == "count") {
    std::vector<char> in(n + 1, 0);
    for (std::size_t j = 0; j < need_array(cell, at).size(); ++j) {
      int c = need_int(cell[j], ptr(at, j));
      if (c < 0 || c > n) throw SchemaError(ptr(at, j), "count out of range");
      in[c] = 1;
    }
    for (std::size_t k = 0; k < s.profile_count(); ++k) {
      int c = 0;
      for (int i = 0; i < n; ++i) c += subset_members[s.coord(k, i)];
      if (in[c]) out.set(k);
    }
  } else if (kind == "multicount") {
    std::set<std::vector<int>> in;
    for (std::size_t j = 0; j < need_array(cell, at).size(); ++j) {
      std::vector<int> v;
      const json& e = need_array(cell[j], ptr(at, j));
      if (e.size() != subsets.size()) throw SchemaError(ptr(at, j), "vector length differs from subset count");
      for (std::size_t l = 0; l < e.size(); ++l) v.push_back(need_int(e[l], ptr(ptr(at, j), l)));
      in.insert(v);
    }
    for (std::size_t k = 0; k < s.profile_count(); ++k) {
      std::vector<int> v(subsets.size(), 0);
      for (std::size_t l = 0; l < subsets.size(); ++l)
        for (int i = 0; i < n; ++i) v[l] += subsets[l][s.coord(k, i)];
      if (in.count(v)) out.set(k);
    }
  } else {
    for (std::size_t j = 0; j < need_array(cell, at).size(); ++j) out.set(profile_of(s, cell[j], ptr(at, j)));
  }
  (void)q;
  return out;
}

}  // namespace

LoadedProtocol protocol_from_json(const json& doc, const TypeSpace& s) {
  if (!doc.is_object()) throw SchemaError("/", "expected an object");
  if (doc.contains("schema") && doc["schema"] != kSchema)
    throw SchemaError("/schema", std::string("unsupported schema, expected ") + kSchema);
  const json& tree = need_array(need(doc, "", "tree"), "/tree");
  if (tree.empty()) throw SchemaError("/tree", "empty tree");
  const int size = static_cast<int>(tree.size());
  std::vector<Node> nodes(size);
  std::vector<int> parent(size, -1);
  nodes[0].label = s.support();
  // Nodes are labelled top-down; a child must be reached from exactly one parent.
  std::vector<int> order{0};
  for (std::size_t head = 0; head < order.size(); ++head) {
    const int v = order[head];
    const std::string at = ptr("/tree", v);
    const json& nd = tree[v];
    if (!nd.is_object()) throw SchemaError(at, "expected an object");
    const json q = nd.contains("query") ? nd["query"] : json(nullptr);
    const json kids = nd.contains("children") ? nd["children"] : json::array();
    need_array(kids, ptr(at, "children"));
    if (q.is_null()) {
      if (!kids.empty()) throw SchemaError(ptr(at, "children"), "children without a query");
      continue;
    }
    const std::string qa = ptr(at, "query");
    std::string kind = need_string(need(q, qa, "kind"), ptr(qa, "kind"));
    if (kind != "elicit" && kind != "count" && kind != "multicount" && kind != "extensional")
      throw SchemaError(ptr(qa, "kind"), "unknown query kind '" + kind + "'");
    int agent = -1;
    std::vector<int> members;
    std::vector<std::vector<int>> subsets;
    Query query;
    const json& cells = need_array(need(q, qa, "cells"), ptr(qa, "cells"));
    if (kids.size() != cells.size()) throw SchemaError(ptr(at, "children"), "expected one child per cell");
    if (kind == "elicit") {
      agent = need_int(need(q, qa, "agent"), ptr(qa, "agent")) - 1;
      if (agent < 0 || agent >= s.agents()) throw SchemaError(ptr(qa, "agent"), "agent out of range");
      std::vector<std::vector<int>> tc;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        tc.emplace_back();
        for (std::size_t j = 0; j < need_array(cells[c], ptr(ptr(qa, "cells"), c)).size(); ++j)
          tc.back().push_back(type_of(s, agent, cells[c][j], ptr(ptr(ptr(qa, "cells"), c), j)));
      }
      query = Query::elicit(agent, tc);
    } else if (kind == "count" || kind == "multicount") {
      if (!s.common_alphabet()) throw SchemaError(qa, "count queries need a common type alphabet");
      auto read_subset = [&](const json& v, const std::string& sa) {
        std::vector<int> in(s.size(0), 0), list;
        for (std::size_t j = 0; j < need_array(v, sa).size(); ++j) {
          int t = type_of(s, 0, v[j], ptr(sa, j));
          in[t] = 1;
          list.push_back(t);
        }
        return std::make_pair(in, list);
      };
      if (kind == "count") {
        auto [in, list] = read_subset(need(q, qa, "subset"), ptr(qa, "subset"));
        members = in;
        std::vector<std::vector<int>> cc;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          cc.emplace_back();
          for (std::size_t j = 0; j < need_array(cells[c], ptr(ptr(qa, "cells"), c)).size(); ++j)
            cc.back().push_back(need_int(cells[c][j], ptr(ptr(ptr(qa, "cells"), c), j)));
        }
        query = Query::count(list, cc);
      } else {
        const json& ss = need_array(need(q, qa, "subsets"), ptr(qa, "subsets"));
        std::vector<std::vector<int>> lists;
        for (std::size_t l = 0; l < ss.size(); ++l) {
          auto [in, list] = read_subset(ss[l], ptr(ptr(qa, "subsets"), l));
          subsets.push_back(in);
          lists.push_back(list);
        }
        std::vector<std::vector<std::vector<int>>> vc;
        for (const auto& cell : cells) vc.push_back(cell.get<std::vector<std::vector<int>>>());
        query = Query::multicount(lists, vc);
      }
    }
    std::vector<ProfileSet> ext;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string ca = ptr(ptr(qa, "cells"), c);
      ProfileSet cs = cell_set(s, q, kind, cells[c], members, ca, agent, subsets);
      ProfileSet lbl = kind == "extensional" ? (cs & s.support()) : (cs & nodes[v].label);
      if (kind == "extensional") ext.push_back(lbl);
      if (kids[c].is_null()) {
        if (lbl.any()) throw ProtocolDefect([&] {
            ValidationReport r;
            r.ok = false;
            r.kind = "non-exhaustive";
            r.node = v;
            r.message = "non-exhaustive at node " + std::to_string(v);
            return r;
          }());
        continue;
      }
      int w = need_int(kids[c], ptr(ptr(at, "children"), c));
      if (w <= 0 || w >= size) throw SchemaError(ptr(ptr(at, "children"), c), "child id out of range");
      if (parent[w] >= 0) throw SchemaError(ptr(ptr(at, "children"), c), "node has two parents");
      parent[w] = v;
      nodes[w].parent = v;
      nodes[w].parent_cell = static_cast<int>(c);
      nodes[w].label = lbl;
      nodes[v].children.push_back(w);
      nodes[v].child_cells.push_back(static_cast<int>(c));
      order.push_back(w);
    }
    if (kind == "extensional") query = Query::extensional(ext);
    nodes[v].query = query;
  }
  for (int v = 1; v < size; ++v)
    if (parent[v] < 0) throw SchemaError(ptr("/tree", v), "node is not reachable from the root");
  Protocol p(s, std::move(nodes));
  auto rep = validate_protocol(p);
  if (!rep.ok) throw ProtocolDefect(rep);
  LoadedProtocol out{std::move(p), std::nullopt};
  if (doc.contains("phase")) {
    std::vector<int> phase;
    const json& ph = need_array(doc["phase"], "/phase");
    for (std::size_t j = 0; j < ph.size(); ++j) phase.push_back(need_int(ph[j], ptr("/phase", j)));
    out.phase = phase;
    out.protocol.suggested_phase = phase;
  }
  return out;
}

json protocol_to_json(const Protocol& p, const std::optional<std::vector<int>>& phase) {
  const TypeSpace& s = p.space();
  json tree = json::array();
  for (int v = 0; v < p.size(); ++v) {
    const Node& nd = p.node(v);
    json node;
    if (nd.children.empty()) {
      node["query"] = nullptr;
      node["children"] = json::array();
      tree.push_back(node);
      continue;
    }
    json q;
    std::size_t ncells = nd.children.size();
    std::vector<int> cell_of_child = nd.child_cells;
    const Query* query = nd.query ? &*nd.query : nullptr;
    if (query && query->kind != QueryKind::Extensional) {
      ncells = query->cell_count();
      json cells = json::array();
      switch (query->kind) {
        case QueryKind::Elicit:
          q["kind"] = "elicit";
          q["agent"] = query->agent + 1;
          for (const auto& c : query->cells) {
            json cell = json::array();
            for (int t : c) cell.push_back(s.label(query->agent, t));
            cells.push_back(cell);
          }
          break;
        case QueryKind::Count: {
          q["kind"] = "count";
          json sub = json::array();
          for (int t : query->subsets[0]) sub.push_back(s.label(0, t));
          q["subset"] = sub;
          for (const auto& c : query->cells) cells.push_back(c);
          break;
        }
        default: {
          q["kind"] = "multicount";
          json subs = json::array();
          for (const auto& ss : query->subsets) {
            json sub = json::array();
            for (int t : ss) sub.push_back(s.label(0, t));
            subs.push_back(sub);
          }
          q["subsets"] = subs;
          for (const auto& c : query->vector_cells) cells.push_back(c);
          break;
        }
      }
      q["cells"] = cells;
    } else {
      q["kind"] = "extensional";
      json cells = json::array();
      for (int c : nd.children) {
        json cell = json::array();
        p.node(c).label.for_each([&](std::size_t k) { cell.push_back(profile_json(s, k)); });
        cells.push_back(cell);
      }
      q["cells"] = cells;
      for (std::size_t j = 0; j < cell_of_child.size(); ++j) cell_of_child[j] = static_cast<int>(j);
    }
    json kids(ncells, nullptr);
    for (std::size_t j = 0; j < nd.children.size(); ++j) kids[cell_of_child[j]] = nd.children[j];
    node["query"] = q;
    node["children"] = kids;
    tree.push_back(node);
  }
  json doc;
  doc["schema"] = kSchema;
  doc["tree"] = tree;
  auto ph = phase ? phase : p.suggested_phase;
  if (ph) doc["phase"] = *ph;
  return doc;
}

}  // namespace cpv
