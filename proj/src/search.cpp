#include "cpv/search.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cpv/privacy.hpp"

namespace cpv {

namespace {

struct Exhausted {
  std::string reason;
};

// Restricted growth strings over m elements with between 2 and max_blocks blocks.
void for_each_partition(int m, int max_blocks, const std::function<void(const std::vector<int>&, int)>& fn) {
  if (m < 2) return;
  std::vector<int> a(m, 0);
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == m) {
      if (used >= 2) fn(a, used);
      return;
    }
    for (int b = 0; b <= used && b < max_blocks; ++b) {
      a[pos] = b;
      rec(pos + 1, std::max(used, b + 1));
    }
  };
  rec(1, 1);
}

std::vector<int> identity(std::size_t m) {
  std::vector<int> a(m);
  for (std::size_t j = 0; j < m; ++j) a[j] = static_cast<int>(j);
  return a;
}

struct Candidate {
  Query query;
  std::vector<int> block;  // block of each member of the state
  int blocks = 0;
};

class CandidateGen {
 public:
  CandidateGen(const TypeSpace& s, const QueryFamily& f) : s_(s), f_(f) {
    if (!f.elicit && !f.count && f.multicount == 0) throw InputError("query family is empty");
    if ((f.count || f.multicount > 0) && !s.common_alphabet())
      throw InputError("count queries need a common type alphabet");
    if (f.multicount == 1) throw InputError("multi-count arity bound must be at least 2");
  }

  std::vector<Candidate> operator()(const std::vector<std::size_t>& members) const {
    std::vector<Candidate> out;
    std::set<std::vector<int>> seen;
    auto add = [&](Query q, const std::vector<int>& keys) {
      std::vector<int> canon(keys.size());
      std::map<int, int> relabel;
      for (std::size_t j = 0; j < keys.size(); ++j) {
        auto it = relabel.emplace(keys[j], static_cast<int>(relabel.size())).first;
        canon[j] = it->second;
      }
      if (relabel.size() < 2 || !seen.insert(canon).second) return;
      out.push_back({std::move(q), canon, static_cast<int>(relabel.size())});
    };
    const int n = s_.agents();
    int cap = f_.max_cells > 0 ? f_.max_cells : 1 << 20;
    if (f_.elicit) {
      for (int i = 0; i < n; ++i) {
        std::vector<int> types;
        for (auto k : members) types.push_back(s_.coord(k, i));
        std::sort(types.begin(), types.end());
        types.erase(std::unique(types.begin(), types.end()), types.end());
        std::vector<int> pos_of(s_.size(i), -1);
        for (std::size_t j = 0; j < types.size(); ++j) pos_of[types[j]] = static_cast<int>(j);
        for_each_partition(static_cast<int>(types.size()), cap, [&](const std::vector<int>& a, int used) {
          std::vector<std::vector<int>> cells(used);
          for (int t = 0; t < s_.size(i); ++t) cells[pos_of[t] < 0 ? 0 : a[pos_of[t]]].push_back(t);
          std::vector<int> keys;
          for (auto k : members) keys.push_back(a[pos_of[s_.coord(k, i)]]);
          add(Query::elicit(i, std::move(cells)), keys);
        });
      }
    }
    if (!f_.count && f_.multicount == 0) return out;
    // Partitions are deduplicated within each query kind only.
    seen.clear();
    const int m = s_.size(0);
    if (m > 16) throw Exhausted{"alphabet too large for count enumeration"};
    // Counts per member for every subset mask.
    auto counts = [&](unsigned mask) {
      std::vector<int> c;
      for (auto k : members) {
        int x = 0;
        for (int i = 0; i < n; ++i) x += (mask >> s_.coord(k, i)) & 1u;
        c.push_back(x);
      }
      return c;
    };
    auto subset_of = [&](unsigned mask) {
      std::vector<int> v;
      for (int t = 0; t < m; ++t)
        if ((mask >> t) & 1u) v.push_back(t);
      return v;
    };
    const unsigned full = (1u << m) - 1;
    if (f_.count) {
      // Complement masks give the same partition: keep those without type 0.
      for (unsigned mask = 2; mask < full; mask += 2) {
        auto c = counts(mask);
        std::vector<int> vals(c);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        std::vector<int> pos_of(n + 1, -1);
        for (std::size_t j = 0; j < vals.size(); ++j) pos_of[vals[j]] = static_cast<int>(j);
        auto emit = [&](const std::vector<int>& a, int used) {
          std::vector<std::vector<int>> cells(used);
          for (int x = 0; x <= n; ++x) cells[pos_of[x] < 0 ? 0 : a[pos_of[x]]].push_back(x);
          std::vector<int> keys;
          for (int x : c) keys.push_back(a[pos_of[x]]);
          add(Query::count(subset_of(mask), std::move(cells)), keys);
        };
        if (f_.coarse_counts)
          for_each_partition(static_cast<int>(vals.size()), std::min(cap, n + 1), emit);
        else if (static_cast<int>(vals.size()) <= cap)
          emit(identity(vals.size()), static_cast<int>(vals.size()));
      }
    }
    seen.clear();
    for (int l = 2; l <= f_.multicount; ++l) {
      std::vector<unsigned> masks;
      for (unsigned mask = 1; mask < full; ++mask) masks.push_back(mask);
      std::vector<int> pick(l);
      std::function<void(int, int)> choose = [&](int j, int from) {
        if (j == l) {
          std::vector<std::vector<int>> vecs(members.size());
          for (int q = 0; q < l; ++q) {
            auto c = counts(masks[pick[q]]);
            for (std::size_t e = 0; e < members.size(); ++e) vecs[e].push_back(c[e]);
          }
          std::vector<std::vector<int>> vals(vecs);
          std::sort(vals.begin(), vals.end());
          vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
          if (f_.coarse_counts && vals.size() > 9) throw Exhausted{"multi-count cell enumeration too large"};
          std::map<std::vector<int>, int> pos_of;
          for (std::size_t e = 0; e < vals.size(); ++e) pos_of[vals[e]] = static_cast<int>(e);
          std::vector<std::vector<int>> subsets;
          for (int q = 0; q < l; ++q) subsets.push_back(subset_of(masks[pick[q]]));
          auto emit = [&](const std::vector<int>& a, int used) {
            std::vector<std::vector<std::vector<int>>> cells(used);
            std::vector<int> v(l, 0);
            std::function<void(int)> all = [&](int q) {
              if (q == l) {
                auto it = pos_of.find(v);
                cells[it == pos_of.end() ? 0 : a[it->second]].push_back(v);
                return;
              }
              for (int x = 0; x <= n; ++x) {
                v[q] = x;
                all(q + 1);
              }
            };
            all(0);
            std::vector<int> keys;
            for (const auto& vec : vecs) keys.push_back(a[pos_of[vec]]);
            add(Query::multicount(subsets, std::move(cells)), keys);
          };
          if (f_.coarse_counts)
            for_each_partition(static_cast<int>(vals.size()), cap, emit);
          else if (static_cast<int>(vals.size()) <= cap)
            emit(identity(vals.size()), static_cast<int>(vals.size()));
          return;
        }
        for (int x = from; x < static_cast<int>(masks.size()); ++x) {
          pick[j] = x;
          choose(j + 1, x + 1);
        }
      };
      choose(0, 0);
    }
    return out;
  }

 private:
  const TypeSpace& s_;
  QueryFamily f_;
};

// First same-outcome unilateral pair in the state separated by the candidate.
std::optional<std::pair<std::size_t, std::size_t>> separated_pair(const ChoiceRule& rule,
                                                                   const std::vector<std::size_t>& members,
                                                                   const std::vector<int>& block, int* agent) {
  const TypeSpace& s = rule.space();
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      if (block[a] == block[b] || rule.outcome(members[a]) != rule.outcome(members[b])) continue;
      int diff = -1, count = 0;
      for (int i = 0; i < s.agents(); ++i)
        if (s.coord(members[a], i) != s.coord(members[b], i)) {
          diff = i;
          ++count;
        }
      if (count == 1) {
        if (agent) *agent = diff;
        return std::make_pair(members[a], members[b]);
      }
    }
  return std::nullopt;
}

class Search {
 public:
  using Admissible = std::function<bool(const std::vector<std::size_t>&, const Candidate&)>;

  Search(const ChoiceRule& rule, const QueryFamily& family, const SearchBudget& budget, Admissible ok)
      : rule_(rule), gen_(rule.space(), family), budget_(budget), ok_(std::move(ok)),
        start_(std::chrono::steady_clock::now()) {}

  SearchResult run() {
    SearchResult r;
    const ProfileSet root = rule_.space().support();
    try {
      bool win = solve(root, 0);
      r.status = win ? SearchStatus::Found : SearchStatus::Nonexistent;
      if (win) r.protocol = rebuild(root);
    } catch (const Exhausted& e) {
      r.status = SearchStatus::BudgetExhausted;
      r.reason = e.reason;
    }
    r.states = states_;
    r.seconds = elapsed();
    return r;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool solve(const ProfileSet& state, int depth) {
    if (budget_.memo) {
      auto it = memo_.find(state);
      if (it != memo_.end()) return it->second;
    }
    if (rule_.constant_on(state)) return remember(state, true);
    if (++states_ > budget_.max_states) throw Exhausted{"state budget exceeded"};
    if (depth >= budget_.max_depth) throw Exhausted{"depth budget exceeded"};
    if (elapsed() > budget_.max_seconds) throw Exhausted{"time budget exceeded"};
    auto members = state.members();
    for (auto& c : gen_(members)) {
      if (!ok_(members, c)) continue;
      std::vector<ProfileSet> kids(c.blocks, ProfileSet(state.universe()));
      for (std::size_t e = 0; e < members.size(); ++e) kids[c.block[e]].set(members[e]);
      bool all = true;
      for (const auto& k : kids)
        if (!solve(k, depth + 1)) {
          all = false;
          break;
        }
      if (all) {
        choice_.insert_or_assign(state, c.query);
        return remember(state, true);
      }
    }
    return remember(state, false);
  }

  bool remember(const ProfileSet& state, bool v) {
    if (budget_.memo) memo_.emplace(state, v);
    return v;
  }

  Protocol rebuild(const ProfileSet& root) {
    ProtocolBuilder pb(rule_.space());
    std::function<void(int)> rec = [&](int v) {
      const ProfileSet label = pb.label(v);
      if (rule_.constant_on(label)) return;
      auto it = choice_.find(label);
      if (it == choice_.end()) throw std::logic_error("search lost a winning query");
      for (auto [cell, child] : pb.split(v, it->second)) {
        (void)cell;
        if (child == v) throw std::logic_error("search query does not separate its state");
        rec(child);
      }
    };
    (void)root;
    rec(pb.root());
    return std::move(pb).build();
  }

  const ChoiceRule& rule_;
  CandidateGen gen_;
  SearchBudget budget_;
  Admissible ok_;
  std::chrono::steady_clock::time_point start_;
  std::size_t states_ = 0;
  std::unordered_map<ProfileSet, bool, BitsetHash> memo_;
  std::unordered_map<ProfileSet, Query, BitsetHash> choice_;
};

}  // namespace

QueryFamily parse_family(const std::string& list) {
  QueryFamily f;
  f.elicit = false;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "elicit")
      f.elicit = true;
    else if (item == "count")
      f.count = true;
    else if (item == "count:any") {
      f.count = true;
      f.coarse_counts = true;
    }
    else if (item.rfind("multicount", 0) == 0) {
      std::string rest = item.substr(10);
      f.multicount = 2;
      if (!rest.empty()) {
        if (rest[0] != ':' || rest.size() < 2) throw InputError("bad query family entry '" + item + "'");
        try {
          f.multicount = std::stoi(rest.substr(1));
        } catch (const std::exception&) {
          throw InputError("bad query family entry '" + item + "'");
        }
        if (f.multicount < 2) throw InputError("multi-count arity must be at least 2");
      }
    } else
      throw InputError("unknown query family '" + item + "'");
  }
  if (!f.elicit && !f.count && f.multicount == 0) throw InputError("query family is empty");
  return f;
}

std::string status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::Found:
      return "found";
    case SearchStatus::Nonexistent:
      return "proven-nonexistent";
    case SearchStatus::BudgetExhausted:
      return "budget-exhausted";
  }
  return {};
}

SearchResult exhaustive_cp_search(const ChoiceRule& rule, const QueryFamily& family, const SearchBudget& budget) {
  if (budget.max_states == 0 || budget.max_depth <= 0 || budget.max_seconds <= 0)
    throw InputError("search budget must be positive");
  Search search(rule, family, budget, [&](const std::vector<std::size_t>& members, const Candidate& c) {
    return !separated_pair(rule, members, c.block, nullptr);
  });
  SearchResult r = search.run();
  if (r.protocol) {
    require_implements(*r.protocol, rule);
    if (!check_protocol_cp(*r.protocol, rule).holds) throw std::logic_error("search produced a non-private protocol");
  }
  return r;
}

SearchResult exhaustive_osp_search(const ChoiceRule& rule, const DomainModel& model, const SearchBudget& budget) {
  if (budget.max_states == 0 || budget.max_depth <= 0 || budget.max_seconds <= 0)
    throw InputError("search budget must be positive");
  const TypeSpace& s = rule.space();
  QueryFamily f;
  Search search(rule, f, budget, [&](const std::vector<std::size_t>& members, const Candidate& c) {
    const int i = c.query.agent;
    std::vector<std::vector<std::size_t>> blocks(c.blocks);
    for (std::size_t e = 0; e < members.size(); ++e) blocks[c.block[e]].push_back(members[e]);
    for (int b = 0; b < c.blocks; ++b) {
      std::set<int> types;
      for (auto k : blocks[b]) types.insert(s.coord(k, i));
      for (int t : types) {
        std::optional<Rational> worst;
        for (auto k : blocks[b])
          if (s.coord(k, i) == t) {
            Rational u = outcome_utility(model, rule, i, t, rule.outcome(k));
            if (!worst || u < *worst) worst = u;
          }
        for (int d = 0; d < c.blocks; ++d) {
          if (d == b) continue;
          for (auto k : blocks[d])
            if (outcome_utility(model, rule, i, t, rule.outcome(k)) > *worst) return false;
        }
      }
    }
    return true;
  });
  SearchResult r = search.run();
  if (r.protocol && !check_protocol_osp(*r.protocol, rule, model).holds)
    throw std::logic_error("search produced a protocol that is not obviously strategyproof");
  return r;
}

ObstructionReport obstruction_scan(const ChoiceRule& rule, const ProfileSet& set, const QueryFamily& family) {
  QueryFamily f = family;
  f.multicount = 0;
  CandidateGen gen(rule.space(), f);
  auto members = set.members();
  ObstructionReport rep;
  rep.vacuous = rule.outcomes_on(set).count() <= 1;
  std::vector<Candidate> cands;
  try {
    cands = gen(members);
  } catch (const Exhausted& e) {
    throw ResourceError(e.reason);
  }
  bool all_violated = true;
  for (auto& c : cands) {
    ObstructionEntry e;
    e.partition.assign(c.blocks, {});
    for (std::size_t j = 0; j < members.size(); ++j) e.partition[c.block[j]].push_back(members[j]);
    e.violated = separated_pair(rule, members, c.block, &e.agent);
    e.safe = !e.violated;
    if (e.safe) all_violated = false;
    e.query = std::move(c.query);
    rep.entries.push_back(std::move(e));
  }
  rep.holds = !rep.vacuous && all_violated;
  return rep;
}

}  // namespace cpv
