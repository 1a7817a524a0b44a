#include "cpv/tatonnement.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace cpv {

namespace {

std::vector<char> membership(const Protocol& p, const std::vector<int>& nodes) {
  std::vector<char> in(p.size(), 0);
  for (int v : nodes) {
    if (v < 0 || v >= p.size()) throw InputError("phase names unknown node " + std::to_string(v));
    if (in[v]) throw InputError("phase repeats node " + std::to_string(v));
    in[v] = 1;
  }
  return in;
}

bool is_count_like(const Node& nd) {
  return nd.query && (nd.query->kind == QueryKind::Count || nd.query->kind == QueryKind::MultiCount);
}

}  // namespace

PhaseReport validate_phase(const Protocol& p, const std::vector<int>& nodes) {
  auto in = membership(p, nodes);
  PhaseReport r;
  r.initial = !nodes.empty() && in[p.root()];
  for (int w : nodes) {
    int parent = p.node(w).parent;
    if (parent < 0 || in[parent]) continue;
    for (int a = p.node(parent).parent; a >= 0; a = p.node(a).parent)
      if (in[a]) {
        r.ok = false;
        r.node = parent;
        r.defect = "phase is not convex: node " + std::to_string(parent) + " lies between phase nodes " +
                   std::to_string(a) + " and " + std::to_string(w);
        return r;
      }
  }
  for (int v : nodes) {
    bool end = true;
    for (int c : p.node(v).children)
      if (in[c]) end = false;
    if (end) r.end.push_back(v);
  }
  std::sort(r.end.begin(), r.end.end());
  return r;
}

std::vector<OutcomeSet> outcome_reach(const Protocol& p, const ChoiceRule& rule) {
  std::vector<OutcomeSet> x(p.size());
  for (int v = p.size() - 1; v >= 0; --v) {
    const Node& nd = p.node(v);
    if (nd.children.empty())
      x[v] = rule.outcomes_on(nd.label);
    else {
      x[v] = OutcomeSet(rule.outcome_count());
      for (int c : nd.children) x[v] |= x[c];
    }
  }
  return x;
}

TatonnementVerdict check_tatonnement(const Protocol& p, const ChoiceRule& rule, const std::vector<int>& phase) {
  auto report = validate_phase(p, phase);
  if (!report.ok) throw InputError(report.defect);
  if (!report.initial) throw InputError("phase does not contain the root");
  auto in = membership(p, phase);
  for (int v : phase) {
    const auto& ch = p.node(v).children;
    bool any = std::any_of(ch.begin(), ch.end(), [&](int c) { return in[c]; });
    bool all = std::all_of(ch.begin(), ch.end(), [&](int c) { return in[c]; });
    if (any && !all)
      throw InputError("phase leaves some children of node " + std::to_string(v) + " outside its end set");
  }
  require_implements(p, rule);
  TatonnementVerdict t;
  t.end = report.end;
  auto x = outcome_reach(p, rule);
  for (std::size_t a = 0; a < t.end.size() && t.disjoint; ++a)
    for (std::size_t b = a + 1; b < t.end.size(); ++b)
      if (x[t.end[a]].intersects(x[t.end[b]])) {
        t.disjoint = false;
        t.overlap_a = t.end[a];
        t.overlap_b = t.end[b];
        break;
      }
  for (int v : t.end) {
    auto cp = check_protocol_cp(p, rule, &p.node(v).label);
    if (!cp.holds) {
      t.failing_subtree = v;
      t.violation = cp.violation;
      break;
    }
  }
  t.holds = t.disjoint && t.failing_subtree < 0;
  if (t.holds && !check_protocol_cp(p, rule).holds)
    throw std::logic_error("tatonnement protocol failed the privacy check");
  return t;
}

std::optional<std::vector<int>> phase_discovery(const Protocol& p, const ChoiceRule& rule) {
  require_implements(p, rule);
  auto x = outcome_reach(p, rule);
  bool counts = false;
  for (const auto& nd : p.nodes()) counts = counts || is_count_like(nd);
  auto expandable = [&](int v) {
    const Node& nd = p.node(v);
    if (nd.children.empty()) return false;
    if (counts && !is_count_like(nd)) return false;
    OutcomeSet seen(rule.outcome_count());
    for (int c : nd.children) {
      if (seen.intersects(x[c])) return false;
      seen |= x[c];
    }
    return true;
  };
  std::vector<int> phase{p.root()};
  if (p.is_leaf(p.root())) return phase;
  if (!expandable(p.root())) return std::nullopt;
  std::deque<int> queue{p.root()};
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    if (!expandable(v)) continue;
    for (int c : p.node(v).children) {
      phase.push_back(c);
      queue.push_back(c);
    }
  }
  std::sort(phase.begin(), phase.end());
  return phase;
}

}  // namespace cpv
