#include "cpv/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cpv/parallel.hpp"

namespace cpv {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void check_factors(const TypeSpace& space, const Factors& f) {
  if (static_cast<int>(f.size()) != space.agents()) throw InputError("witness needs one factor per agent");
  for (int i = 0; i < space.agents(); ++i) {
    if (f[i].empty()) throw InputError("witness factor for agent " + std::to_string(i + 1) + " is empty");
    std::vector<char> seen(space.size(i), 0);
    for (int t : f[i]) {
      if (t < 0 || t >= space.size(i))
        throw InputError("witness factor for agent " + std::to_string(i + 1) + " has an out-of-range type");
      if (seen[t]) throw InputError("witness factor for agent " + std::to_string(i + 1) + " repeats a type");
      seen[t] = 1;
    }
  }
}

Factors sorted(Factors f) {
  for (auto& s : f) std::sort(s.begin(), s.end());
  return f;
}

// Calls fn(k) for every profile of the product with agent i's coordinate fixed
// to factors[i][0], i.e. once per opponent profile.
template <class F>
void for_each_opponent(const TypeSpace& space, const Factors& f, int agent, F&& fn) {
  const int n = space.agents();
  std::vector<std::size_t> pos(n, 0);
  while (true) {
    std::size_t k = 0;
    for (int j = 0; j < n; ++j) k += static_cast<std::size_t>(f[j][j == agent ? 0 : pos[j]]) * space.stride(j);
    fn(k);
    int j = n - 1;
    for (; j >= 0; --j) {
      if (j == agent) continue;
      if (++pos[j] < f[j].size()) break;
      pos[j] = 0;
    }
    if (j < 0) break;
  }
}

// Generic unilateral-pair scan over the protocol's leaves.
template <class Same>
CpVerdict scan_pairs(const Protocol& p, const ChoiceRule& rule, const ProfileSet* scope, Same same) {
  const TypeSpace& space = rule.space();
  const ProfileSet& support = space.support();
  auto inside = [&](std::size_t k) { return support.test(k) && (!scope || scope->test(k)); };
  CpVerdict v;
  for (int i = 0; i < space.agents(); ++i) {
    auto hit_type = [&](std::size_t k) -> int {
      if (!inside(k)) return -1;
      int t = space.coord(k, i);
      for (int u = t + 1; u < space.size(i); ++u) {
        std::size_t k2 = space.with_coord(k, i, u);
        if (inside(k2) && p.leaf_of(k) != p.leaf_of(k2) && same(i, k, k2)) return u;
      }
      return -1;
    };
    auto found = find_first(space.profile_count(), [&](std::size_t k) { return hit_type(k) >= 0; });
    if (!found) continue;
    Violation w;
    w.agent = i;
    w.profile_a = *found;
    w.type_a = space.coord(*found, i);
    w.type_b = hit_type(*found);
    w.profile_b = space.with_coord(*found, i, w.type_b);
    w.leaf_a = p.leaf_of(w.profile_a);
    w.leaf_b = p.leaf_of(w.profile_b);
    w.outcome = rule.outcome(w.profile_a);
    v.per_agent.push_back(w);
  }
  if (!v.per_agent.empty()) {
    v.holds = false;
    v.violation = v.per_agent.front();
  }
  return v;
}

}  // namespace

InseparabilityPartition inseparability_classes(const ChoiceRule& rule, const Factors& factors, int agent) {
  const TypeSpace& space = rule.space();
  check_factors(space, factors);
  if (agent < 0 || agent >= space.agents()) throw InputError("unknown agent");
  Factors f = sorted(factors);
  const auto& own = f[agent];
  UnionFind uf(space.size(agent));
  // Stamped table outcome -> first type seen with it for the current opponent profile.
  std::vector<int> first_type(rule.outcome_count(), -1), stamp(rule.outcome_count(), -1);
  int gen = 0;
  for_each_opponent(space, f, agent, [&](std::size_t base) {
    ++gen;
    for (int t : own) {
      std::size_t k = space.with_coord(base, agent, t);
      int x = rule.outcome(k);
      if (x < 0) throw InputError("factors leave the rule's support");
      if (stamp[x] == gen)
        uf.unite(first_type[x], t);
      else {
        stamp[x] = gen;
        first_type[x] = t;
      }
    }
  });
  InseparabilityPartition out;
  out.agent = agent;
  out.base = f;
  out.class_of.assign(space.size(agent), -1);
  std::vector<int> root_class(space.size(agent), -1);
  for (int t : own) {
    int r = uf.find(t);
    if (root_class[r] < 0) {
      root_class[r] = static_cast<int>(out.classes.size());
      out.classes.emplace_back();
    }
    out.class_of[t] = root_class[r];
    out.classes[root_class[r]].push_back(t);
  }
  return out;
}

InseparabilityPartition inseparability_classes(const ChoiceRule& rule, const ProfileSet& set, int agent) {
  auto f = product_factorization(rule.space(), set);
  if (!f) throw InputError("inseparability classes need a product set");
  return inseparability_classes(rule, *f, agent);
}

CpVerdict check_protocol_cp(const Protocol& p, const ChoiceRule& rule, const ProfileSet* scope) {
  require_implements(p, rule);
  return scan_pairs(p, rule, scope, [&](int, std::size_t a, std::size_t b) {
    return rule.outcome(a) == rule.outcome(b);
  });
}

CpVerdict check_protocol_icp(const Protocol& p, const ChoiceRule& rule) {
  if (!rule.has_components()) throw InputError("individual privacy needs per-agent outcome components");
  require_implements(p, rule);
  auto v = scan_pairs(p, rule, nullptr, [&](int i, std::size_t a, std::size_t b) {
    return rule.component(i, a) == rule.component(i, b);
  });
  for (auto& w : v.per_agent) w.outcome = rule.component(w.agent, w.profile_a);
  if (v.violation) v.violation = v.per_agent.front();
  return v;
}

GcpVerdict check_protocol_gcp(const Protocol& p, const ChoiceRule& rule) {
  require_implements(p, rule);
  GcpVerdict def;
  // Definition: no outcome is reached at two different leaves.
  std::vector<int> leaf_of_outcome(rule.outcome_count(), -1);
  std::vector<std::size_t> witness(rule.outcome_count(), 0);
  rule.space().support().for_each([&](std::size_t k) {
    if (def.pair) return;
    int x = rule.outcome(k), z = p.leaf_of(k);
    if (leaf_of_outcome[x] < 0) {
      leaf_of_outcome[x] = z;
      witness[x] = k;
    } else if (leaf_of_outcome[x] != z) {
      def.holds = false;
      def.pair = std::make_pair(witness[x], k);
    }
  });
  // Characterization: children of every query reach pairwise disjoint outcome sets.
  int bad = -1;
  for (int v = 0; v < p.size() && bad < 0; ++v) {
    const Node& nd = p.node(v);
    OutcomeSet seen(rule.outcome_count());
    for (int c : nd.children) {
      OutcomeSet xs = rule.outcomes_on(p.node(c).label);
      if (seen.intersects(xs)) {
        bad = v;
        break;
      }
      seen |= xs;
    }
  }
  if (def.holds != (bad < 0))
    throw std::logic_error("group privacy: definition and characterization disagree");
  def.node = bad;
  return def;
}

std::optional<CornersViolation> corners_scan(const ChoiceRule& rule) {
  const TypeSpace& space = rule.space();
  const int n = space.agents();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto at = [&](std::size_t k, CornersViolation* out) {
        if (!space.in_support(k)) return false;
        int a = space.coord(k, i), c = space.coord(k, j);
        for (int b = a + 1; b < space.size(i); ++b)
          for (int d = c + 1; d < space.size(j); ++d) {
            std::size_t q[4] = {k, space.with_coord(k, j, d), space.with_coord(k, i, b),
                                space.with_coord(space.with_coord(k, i, b), j, d)};
            if (!space.in_support(q[1]) || !space.in_support(q[2]) || !space.in_support(q[3])) continue;
            int x[4];
            for (int e = 0; e < 4; ++e) x[e] = rule.outcome(q[e]);
            for (int odd = 0; odd < 4; ++odd) {
              int ref = x[(odd + 1) % 4];
              bool three = true;
              for (int e = 0; e < 4; ++e)
                if (e != odd && x[e] != ref) three = false;
              if (three && x[odd] != ref) {
                if (out) {
                  out->agent_i = i;
                  out->agent_j = j;
                  for (int e = 0; e < 4; ++e) out->corners[e] = q[e];
                  out->odd = odd;
                  out->outcome = ref;
                }
                return true;
              }
            }
          }
        return false;
      };
      auto found = find_first(space.profile_count(), [&](std::size_t k) { return at(k, nullptr); });
      if (found) {
        CornersViolation v;
        at(*found, &v);
        return v;
      }
    }
  return std::nullopt;
}

bool witness_verify(const ChoiceRule& rule, const Witness& w) {
  const TypeSpace& space = rule.space();
  check_factors(space, w.factors);
  ProfileSet set = space.product_set(sorted(w.factors));
  if (!set.subset_of(space.support())) throw InputError("witness leaves the rule's support");
  if (rule.constant_on(set)) return false;
  for (int i = 0; i < space.agents(); ++i)
    if (inseparability_classes(rule, w.factors, i).classes.size() != 1) return false;
  return true;
}

Witness minimize_witness(const ChoiceRule& rule, const Witness& w) {
  Witness cur{sorted(w.factors)};
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < cur.factors.size(); ++i)
      for (std::size_t e = 0; e < cur.factors[i].size() && cur.factors[i].size() > 1;) {
        Witness trial = cur;
        trial.factors[i].erase(trial.factors[i].begin() + static_cast<long>(e));
        if (witness_verify(rule, trial)) {
          cur = std::move(trial);
          changed = true;
        } else {
          ++e;
        }
      }
  }
  return cur;
}

Synthesis synthesize_or_witness(const ChoiceRule& rule, bool minimize) {
  const TypeSpace& space = rule.space();
  auto root = product_factorization(space, space.support());
  if (!root) throw InputError("synthesis needs a product type space");
  ProtocolBuilder b(space);
  Synthesis out;
  std::vector<std::pair<int, Factors>> stack{{b.root(), *root}};
  while (!stack.empty()) {
    auto [v, f] = std::move(stack.back());
    stack.pop_back();
    if (rule.constant_on(b.label(v))) continue;
    int agent = -1;
    InseparabilityPartition part;
    for (int i = 0; i < space.agents() && agent < 0; ++i) {
      part = inseparability_classes(rule, f, i);
      if (part.classes.size() > 1) agent = i;
    }
    if (agent < 0) {
      out.witness = Witness{f};
      if (minimize) out.minimal = minimize_witness(rule, *out.witness);
      return out;
    }
    const auto& cls = part.classes[part.class_of[f[agent].front()]];
    auto children = b.split(v, Query::elicit_in(space, agent, cls));
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      Factors g = f;
      std::vector<int> keep;
      for (int t : f[agent])
        if ((std::find(cls.begin(), cls.end(), t) != cls.end()) == (it->first == 0)) keep.push_back(t);
      g[agent] = keep;
      stack.emplace_back(it->second, std::move(g));
    }
  }
  Protocol p = std::move(b).build();
  if (!validate_protocol(p).ok || !check_protocol_cp(p, rule).holds)
    throw std::logic_error("synthesized protocol failed its own check");
  out.protocol = std::move(p);
  return out;
}

std::optional<Witness> witness_oracle(const ChoiceRule& rule, const OracleOptions& opts) {
  const TypeSpace& space = rule.space();
  const int n = space.agents();
  double total = 1;
  for (int i = 0; i < n; ++i) total *= std::ldexp(1.0, space.size(i)) - 1;
  auto try_masks = [&](const std::vector<std::uint64_t>& masks) -> std::optional<Witness> {
    Witness w;
    for (int i = 0; i < n; ++i) {
      w.factors.emplace_back();
      for (int t = 0; t < space.size(i); ++t)
        if ((masks[i] >> t) & 1u) w.factors.back().push_back(t);
    }
    if (!space.product_set(w.factors).subset_of(space.support())) return std::nullopt;
    if (witness_verify(rule, w)) return w;
    return std::nullopt;
  };
  for (int i = 0; i < n; ++i)
    if (space.size(i) > 62) throw ResourceError("alphabet too large for the witness oracle");
  if (total > opts.cap) {
    if (!opts.sampling) throw ResourceError("witness oracle would enumerate more product sets than the cap");
    std::mt19937_64 rng(opts.seed);
    std::vector<std::uint64_t> masks(n);
    for (std::size_t s = 0; s < opts.samples; ++s) {
      for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::uint64_t> d(1, (std::uint64_t{1} << space.size(i)) - 1);
        masks[i] = d(rng);
      }
      if (auto w = try_masks(masks)) return w;
    }
    return std::nullopt;
  }
  std::vector<std::uint64_t> masks(n, 1);
  while (true) {
    if (auto w = try_masks(masks)) return w;
    int i = n - 1;
    while (i >= 0 && masks[i] == (std::uint64_t{1} << space.size(i)) - 1) masks[i--] = 1;
    if (i < 0) break;
    ++masks[i];
  }
  return std::nullopt;
}

NonbossyVerdict check_nonbossy(const ChoiceRule& rule) {
  if (!rule.has_components()) throw InputError("non-bossiness needs per-agent outcome components");
  const TypeSpace& space = rule.space();
  NonbossyVerdict v;
  for (int i = 0; i < space.agents(); ++i) {
    auto hit = [&](std::size_t k) -> int {
      if (!space.in_support(k)) return -1;
      for (int u = space.coord(k, i) + 1; u < space.size(i); ++u) {
        std::size_t k2 = space.with_coord(k, i, u);
        if (space.in_support(k2) && rule.component(i, k) == rule.component(i, k2) &&
            rule.outcome(k) != rule.outcome(k2))
          return u;
      }
      return -1;
    };
    auto found = find_first(space.profile_count(), [&](std::size_t k) { return hit(k) >= 0; });
    if (!found) continue;
    v.holds = false;
    v.agent = i;
    v.profile_a = *found;
    v.type_a = space.coord(*found, i);
    v.type_b = hit(*found);
    v.profile_b = space.with_coord(*found, i, v.type_b);
    for (int j = 0; j < space.agents(); ++j)
      if (rule.component(j, v.profile_a) != rule.component(j, v.profile_b)) {
        v.other = j;
        break;
      }
    return v;
  }
  return v;
}

}  // namespace cpv
