#include "cpv/protocol.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cpv {

namespace {

void check_partition(const std::vector<std::vector<int>>& cells, int domain, const std::string& what) {
  if (cells.size() < 2) throw InputError(what + " needs at least two cells");
  std::vector<int> seen(domain, -1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].empty()) throw InputError(what + " has an empty cell");
    for (int x : cells[c]) {
      if (x < 0 || x >= domain) throw InputError(what + " cell entry " + std::to_string(x) + " out of range");
      if (seen[x] >= 0) throw InputError(what + " cells overlap at " + std::to_string(x));
      seen[x] = static_cast<int>(c);
    }
  }
  for (int x = 0; x < domain; ++x)
    if (seen[x] < 0) throw InputError(what + " cells miss " + std::to_string(x));
}

std::string set_text(const TypeSpace& space, int agent, const std::vector<int>& types) {
  std::string s = "{";
  for (std::size_t j = 0; j < types.size(); ++j) {
    if (j) s += ",";
    s += space.label(agent, types[j]);
  }
  return s + "}";
}

std::string int_set_text(const std::vector<int>& xs) {
  std::string s = "{";
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(xs[j]);
  }
  return s + "}";
}

int count_in(const TypeSpace& space, std::size_t index, const std::vector<char>& member) {
  int c = 0;
  for (int i = 0; i < space.agents(); ++i) c += member[space.coord(index, i)];
  return c;
}

std::vector<char> membership(const TypeSpace& space, const std::vector<int>& subset) {
  std::vector<char> m(space.size(0), 0);
  for (int t : subset) m[t] = 1;
  return m;
}

}  // namespace

Query Query::elicit(int agent, std::vector<std::vector<int>> cells) {
  Query q;
  q.kind = QueryKind::Elicit;
  q.agent = agent;
  q.cells = std::move(cells);
  return q;
}

Query Query::elicit_in(const TypeSpace& space, int agent, const std::vector<int>& yes) {
  std::vector<int> no;
  for (int t = 0; t < space.size(agent); ++t)
    if (std::find(yes.begin(), yes.end(), t) == yes.end()) no.push_back(t);
  return elicit(agent, {yes, no});
}

Query Query::count(std::vector<int> subset, std::vector<std::vector<int>> cells) {
  Query q;
  q.kind = QueryKind::Count;
  q.subsets = {std::move(subset)};
  q.cells = std::move(cells);
  return q;
}

Query Query::multicount(std::vector<std::vector<int>> subsets,
                        std::vector<std::vector<std::vector<int>>> cells) {
  Query q;
  q.kind = QueryKind::MultiCount;
  q.subsets = std::move(subsets);
  q.vector_cells = std::move(cells);
  return q;
}

Query Query::extensional(std::vector<ProfileSet> children) {
  Query q;
  q.kind = QueryKind::Extensional;
  q.children = std::move(children);
  return q;
}

std::size_t Query::cell_count() const {
  switch (kind) {
    case QueryKind::Elicit:
    case QueryKind::Count:
      return cells.size();
    case QueryKind::MultiCount:
      return vector_cells.size();
    case QueryKind::Extensional:
      return children.size();
  }
  return 0;
}

int Query::cell_of(const TypeSpace& space, std::size_t index) const {
  switch (kind) {
    case QueryKind::Elicit: {
      int t = space.coord(index, agent);
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (std::find(cells[c].begin(), cells[c].end(), t) != cells[c].end()) return static_cast<int>(c);
      return -1;
    }
    case QueryKind::Count: {
      int n = count_in(space, index, membership(space, subsets[0]));
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (std::find(cells[c].begin(), cells[c].end(), n) != cells[c].end()) return static_cast<int>(c);
      return -1;
    }
    case QueryKind::MultiCount: {
      std::vector<int> v;
      for (const auto& s : subsets) v.push_back(count_in(space, index, membership(space, s)));
      for (std::size_t c = 0; c < vector_cells.size(); ++c)
        if (std::find(vector_cells[c].begin(), vector_cells[c].end(), v) != vector_cells[c].end())
          return static_cast<int>(c);
      return -1;
    }
    case QueryKind::Extensional:
      for (std::size_t c = 0; c < children.size(); ++c)
        if (children[c].test(index)) return static_cast<int>(c);
      return -1;
  }
  return -1;
}

void Query::check(const TypeSpace& space) const {
  const int n = space.agents();
  switch (kind) {
    case QueryKind::Elicit:
      if (agent < 0 || agent >= n) throw InputError("elicitation query names an unknown agent");
      check_partition(cells, space.size(agent), "elicitation query");
      return;
    case QueryKind::Count:
    case QueryKind::MultiCount: {
      const char* what = kind == QueryKind::Count ? "count query" : "multi-count query";
      if (!space.common_alphabet()) throw InputError(std::string(what) + " requires a common alphabet");
      if (subsets.empty()) throw InputError(std::string(what) + " needs a subset");
      if (kind == QueryKind::Count && subsets.size() != 1) throw InputError("count query takes one subset");
      for (const auto& s : subsets) {
        std::set<int> seen;
        for (int t : s)
          if (t < 0 || t >= space.size(0) || !seen.insert(t).second)
            throw InputError(std::string(what) + " subset entry out of range or repeated");
      }
      if (kind == QueryKind::Count) {
        check_partition(cells, n + 1, what);
        return;
      }
      const std::size_t l = subsets.size();
      std::size_t domain = 1;
      for (std::size_t j = 0; j < l; ++j) {
        if (domain > 1000000) throw ResourceError("multi-count domain too large");
        domain *= static_cast<std::size_t>(n + 1);
      }
      std::vector<std::vector<int>> flat;
      for (const auto& cell : vector_cells) {
        flat.emplace_back();
        for (const auto& v : cell) {
          if (v.size() != l) throw InputError("multi-count cell vector has wrong length");
          std::size_t code = 0;
          for (int x : v) {
            if (x < 0 || x > n) throw InputError("multi-count cell entry out of range");
            code = code * (n + 1) + static_cast<std::size_t>(x);
          }
          flat.back().push_back(static_cast<int>(code));
        }
      }
      check_partition(flat, static_cast<int>(domain), what);
      return;
    }
    case QueryKind::Extensional:
      if (children.size() < 2) throw InputError("extensional query needs at least two children");
      for (const auto& c : children)
        if (c.universe() != space.profile_count()) throw InputError("extensional child has wrong universe");
      return;
  }
}

std::string Query::describe(const TypeSpace& space) const {
  switch (kind) {
    case QueryKind::Elicit:
      if (cells.size() == 2) return "agent " + std::to_string(agent + 1) + ": type in " + set_text(space, agent, cells[0]) + "?";
      return "agent " + std::to_string(agent + 1) + ": which cell?";
    case QueryKind::Count:
      return "count of agents with type in " + set_text(space, 0, subsets[0]);
    case QueryKind::MultiCount: {
      std::string s = "counts of agents with type in ";
      for (std::size_t j = 0; j < subsets.size(); ++j) {
        if (j) s += ", ";
        s += set_text(space, 0, subsets[j]);
      }
      return s;
    }
    case QueryKind::Extensional:
      return "extensional split";
  }
  return {};
}

std::string Query::describe_cell(const TypeSpace& space, int cell) const {
  switch (kind) {
    case QueryKind::Elicit:
      if (cells.size() == 2) return cell == 0 ? "yes" : "no";
      return set_text(space, agent, cells[cell]);
    case QueryKind::Count:
      return int_set_text(cells[cell]);
    case QueryKind::MultiCount: {
      std::string s = "{";
      for (std::size_t j = 0; j < vector_cells[cell].size(); ++j) {
        if (j) s += ",";
        std::string v = "(";
        for (std::size_t e = 0; e < vector_cells[cell][j].size(); ++e) {
          if (e) v += ",";
          v += std::to_string(vector_cells[cell][j][e]);
        }
        s += v + ")";
      }
      return s + "}";
    }
    case QueryKind::Extensional:
      return "child " + std::to_string(cell);
  }
  return {};
}

Protocol::Protocol(TypeSpace space, std::vector<Node> nodes, std::vector<std::string> notes)
    : space_(std::move(space)), nodes_(std::move(nodes)), notes_(std::move(notes)) {
  if (nodes_.empty()) throw InputError("protocol has no nodes");
  leaf_of_.assign(space_.profile_count(), -1);
  for (int v = 0; v < size(); ++v)
    if (nodes_[v].children.empty())
      nodes_[v].label.for_each([&](std::size_t k) {
        if (leaf_of_[k] < 0) leaf_of_[k] = v;
      });
}

std::vector<int> Protocol::leaves() const {
  std::vector<int> out;
  for (int v = 0; v < size(); ++v)
    if (nodes_[v].children.empty()) out.push_back(v);
  return out;
}

bool Protocol::precedes(int u, int w) const {
  for (int v = nodes_.at(w).parent; v >= 0; v = nodes_[v].parent)
    if (v == u) return true;
  return false;
}

std::vector<int> Protocol::path_to(int v) const {
  std::vector<int> out;
  for (; v >= 0; v = nodes_.at(v).parent) out.push_back(v);
  std::reverse(out.begin(), out.end());
  return out;
}

int Protocol::depth(int v) const { return static_cast<int>(path_to(v).size()) - 1; }

std::vector<int> Protocol::subtree(int v) const {
  std::vector<int> out, stack{v};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    out.push_back(u);
    const auto& ch = nodes_[u].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

ProtocolBuilder::ProtocolBuilder(TypeSpace space) : space_(std::move(space)) {
  Node root;
  root.label = space_.support();
  nodes_.push_back(std::move(root));
}

std::vector<std::pair<int, int>> ProtocolBuilder::split(int v, const Query& q) {
  if (v < 0 || v >= static_cast<int>(nodes_.size())) throw InputError("unknown node");
  if (nodes_[v].query) throw InputError("node already carries a query");
  q.check(space_);
  const ProfileSet parent = nodes_[v].label;
  std::vector<ProfileSet> cells;
  if (q.kind == QueryKind::Extensional) {
    cells = q.children;
  } else {
    cells.assign(q.cell_count(), space_.empty_set());
    parent.for_each([&](std::size_t k) {
      int c = q.cell_of(space_, k);
      if (c >= 0) cells[c].set(k);
    });
  }
  std::vector<std::pair<int, int>> out;
  if (q.kind != QueryKind::Extensional) {
    std::vector<int> nonempty;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].any()) nonempty.push_back(static_cast<int>(c));
    if (nonempty.size() < cells.size())
      notes_.push_back("node " + std::to_string(v) + ": pruned " +
                       std::to_string(cells.size() - nonempty.size()) + " empty cell(s) of " +
                       q.describe(space_));
    if (nonempty.size() == 1) {
      notes_.push_back("node " + std::to_string(v) + ": contracted one-cell query " + q.describe(space_));
      return {{nonempty[0], v}};
    }
    for (int c : nonempty) {
      Node child;
      child.parent = v;
      child.parent_cell = c;
      child.label = std::move(cells[c]);
      int id = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(child));
      nodes_[v].children.push_back(id);
      nodes_[v].child_cells.push_back(c);
      out.emplace_back(c, id);
    }
  } else {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      Node child;
      child.parent = v;
      child.parent_cell = static_cast<int>(c);
      child.label = std::move(cells[c]);
      int id = static_cast<int>(nodes_.size());
      nodes_.push_back(std::move(child));
      nodes_[v].children.push_back(id);
      nodes_[v].child_cells.push_back(static_cast<int>(c));
      out.emplace_back(static_cast<int>(c), id);
    }
  }
  nodes_[v].query = q;
  return out;
}

Protocol ProtocolBuilder::build() && {
  return Protocol(std::move(space_), std::move(nodes_), std::move(notes_));
}

ValidationReport validate_protocol(const Protocol& p) {
  ValidationReport r;
  r.notes = p.notes();
  auto fail = [&](const std::string& kind, int node) {
    r.ok = false;
    r.kind = kind;
    r.node = node;
    r.path = p.path_to(node);
    r.message = kind + " at node " + std::to_string(node);
    return r;
  };
  const auto& space = p.space();
  if (!(p.node(0).label == space.support())) return fail("root label is not the full space", 0);
  for (int v = 0; v < p.size(); ++v) {
    const Node& nd = p.node(v);
    if (nd.label.none()) return fail("empty label", v);
    if (nd.children.empty()) continue;
    if (nd.children.size() < 2) return fail("fewer than two children", v);
    ProfileSet uni = space.empty_set();
    for (int c : nd.children)
      if (p.node(c).label.none()) return fail("empty label", c);
    for (int c : nd.children)
      if (!p.node(c).label.subset_of(nd.label)) return fail("child escapes parent", v);
    for (int c : nd.children) {
      if (uni.intersects(p.node(c).label)) return fail("overlap", v);
      uni |= p.node(c).label;
    }
    if (!(uni == nd.label)) return fail("non-exhaustive", v);
    if (nd.query && nd.query->kind != QueryKind::Extensional) {
      for (std::size_t j = 0; j < nd.children.size(); ++j) {
        const ProfileSet& lbl = p.node(nd.children[j]).label;
        bool consistent = true;
        nd.label.for_each([&](std::size_t k) {
          if ((nd.query->cell_of(space, k) == nd.child_cells[j]) != lbl.test(k)) consistent = false;
        });
        if (!consistent) return fail("label inconsistent with query", v);
      }
    }
  }
  return r;
}

Classification classify_query(const Protocol& p, int node, std::size_t budget) {
  Classification out;
  const Node& nd = p.node(node);
  if (nd.children.empty()) return out;
  const TypeSpace& space = p.space();
  const int n = space.agents();
  std::vector<int> child(space.profile_count(), -1);
  for (std::size_t j = 0; j < nd.children.size(); ++j)
    p.node(nd.children[j]).label.for_each([&](std::size_t k) { child[k] = static_cast<int>(j); });
  const std::vector<std::size_t> members = nd.label.members();

  for (int i = 0; i < n; ++i) {
    std::vector<int> seen(space.size(i), -1);
    bool ok = true;
    for (std::size_t k : members) {
      int& s = seen[space.coord(k, i)];
      if (s < 0)
        s = child[k];
      else if (s != child[k]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.cls = QueryClass::Elicit;
      out.agent = i;
      return out;
    }
  }
  out.cls = QueryClass::ExtensionalOnly;
  if (!space.common_alphabet()) return out;
  const int m = space.size(0);
  if (m > 20) return out;

  // Does the vector of counts over the given subset masks determine the child?
  auto determined_by = [&](const std::vector<std::uint32_t>& masks) {
    std::map<std::vector<int>, int> seen;
    std::vector<int> key(masks.size());
    for (std::size_t k : members) {
      for (std::size_t j = 0; j < masks.size(); ++j) {
        int c = 0;
        for (int i = 0; i < n; ++i) c += (masks[j] >> space.coord(k, i)) & 1u;
        key[j] = c;
      }
      auto [it, fresh] = seen.emplace(key, child[k]);
      if (!fresh && it->second != child[k]) return false;
    }
    return true;
  };
  auto to_subsets = [&](const std::vector<std::uint32_t>& masks) {
    std::vector<std::vector<int>> s;
    for (auto mask : masks) {
      s.emplace_back();
      for (int t = 0; t < m; ++t)
        if ((mask >> t) & 1u) s.back().push_back(t);
    }
    return s;
  };

  const std::uint32_t full = (m >= 32) ? ~0u : ((1u << m) - 1);
  std::size_t spent = 0;
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    ++spent;
    if (determined_by({mask})) {
      out.cls = QueryClass::Count;
      out.arity = 1;
      out.subsets = to_subsets({mask});
      return out;
    }
  }
  std::vector<std::uint32_t> singletons;
  for (int t = 0; t + 1 < m; ++t) singletons.push_back(1u << t);
  if (m < 3 || !determined_by(singletons)) return out;  // not anonymous

  out.cls = QueryClass::MultiCount;
  for (int l = 2; l < m - 1; ++l) {
    std::vector<std::uint32_t> combo(l);
    for (int j = 0; j < l; ++j) combo[j] = static_cast<std::uint32_t>(j + 1);
    while (true) {
      if (++spent > budget) {
        out.arity = m - 1;
        out.subsets = to_subsets(singletons);
        out.cap_reached = true;
        return out;
      }
      if (determined_by(combo)) {
        out.arity = l;
        out.subsets = to_subsets(combo);
        return out;
      }
      int j = l - 1;
      while (j >= 0 && combo[j] == full - static_cast<std::uint32_t>(l - j)) --j;
      if (j < 0) break;
      ++combo[j];
      for (int e = j + 1; e < l; ++e) combo[e] = combo[e - 1] + 1;
    }
  }
  out.arity = m - 1;
  out.subsets = to_subsets(singletons);
  return out;
}

std::string class_name(const Classification& c) {
  switch (c.cls) {
    case QueryClass::Leaf:
      return "leaf";
    case QueryClass::Elicit:
      return "elicit(" + std::to_string(c.agent + 1) + ")";
    case QueryClass::Count:
      return "count";
    case QueryClass::MultiCount:
      return "multicount(" + std::to_string(c.arity) + ")";
    case QueryClass::ExtensionalOnly:
      return "extensional-only";
  }
  return {};
}

Transcript run_protocol(const Protocol& p, std::size_t profile, const ChoiceRule* rule) {
  const TypeSpace& space = p.space();
  if (profile >= space.profile_count() || !space.in_support(profile))
    throw InputError("profile is not in the protocol's space");
  Transcript t;
  int v = p.root();
  while (!p.is_leaf(v)) {
    const Node& nd = p.node(v);
    int next = -1;
    std::size_t j = 0;
    for (; j < nd.children.size(); ++j)
      if (p.node(nd.children[j]).label.test(profile)) {
        next = nd.children[j];
        break;
      }
    if (next < 0) throw InputError("profile falls outside every child at node " + std::to_string(v));
    Step s;
    s.node = v;
    s.child = next;
    s.cell = nd.child_cells[j];
    if (nd.query) {
      s.query = nd.query->describe(space);
      s.answer = nd.query->describe_cell(space, s.cell);
    } else {
      s.query = "extensional split";
      s.answer = "child " + std::to_string(j);
    }
    t.steps.push_back(std::move(s));
    v = next;
  }
  t.leaf = v;
  if (rule) {
    const ProfileSet& lbl = p.node(v).label;
    int x = rule->outcome(profile);
    std::size_t other = lbl.universe();
    lbl.for_each([&](std::size_t k) {
      if (other == lbl.universe() && rule->outcome(k) != x) other = k;
    });
    if (other != lbl.universe()) throw NotImplemented(v, profile, other);
    t.outcome = x;
  }
  return t;
}

ImplementsResult implements(const Protocol& p, const ChoiceRule& rule) {
  ImplementsResult r;
  for (int leaf : p.leaves()) {
    const ProfileSet& lbl = p.node(leaf).label;
    std::size_t a = lbl.first();
    if (a == lbl.universe()) continue;
    int x = rule.outcome(a);
    for (std::size_t k = lbl.next(a + 1); k < lbl.universe(); k = lbl.next(k + 1))
      if (rule.outcome(k) != x) {
        r.holds = false;
        r.leaf = leaf;
        r.first = a;
        r.second = k;
        return r;
      }
  }
  return r;
}

void require_implements(const Protocol& p, const ChoiceRule& rule) {
  if (!p.space().same_product(rule.space()))
    throw InputError("protocol and rule live on different type spaces");
  auto r = implements(p, rule);
  if (!r.holds) throw NotImplemented(r.leaf, r.first, r.second);
}

int earliest_departure(const Protocol& p, std::size_t a, std::size_t b) {
  int la = p.leaf_of(a), lb = p.leaf_of(b);
  if (la < 0 || lb < 0) throw InputError("profile outside the protocol's space");
  if (la == lb) throw NotSeparated("profiles reach the same leaf");
  auto pa = p.path_to(la), pb = p.path_to(lb);
  std::size_t i = 0;
  while (i < pa.size() && i < pb.size() && pa[i] == pb[i]) ++i;
  return pa[i - 1];
}

}  // namespace cpv
