#include "cpv/mechanisms.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace cpv {

using nlohmann::json;

namespace {

int param_int(const json& p, const char* key, int def) {
  if (!p.is_object() || !p.contains(key)) return def;
  if (!p[key].is_number_integer()) throw InputError(std::string("parameter '") + key + "' must be an integer");
  return p[key].get<int>();
}

std::string param_str(const json& p, const char* key, const std::string& def) {
  if (!p.is_object() || !p.contains(key)) return def;
  if (!p[key].is_string()) throw InputError(std::string("parameter '") + key + "' must be a string");
  return p[key].get<std::string>();
}

bool param_bool(const json& p, const char* key, bool def) {
  if (!p.is_object() || !p.contains(key)) return def;
  if (!p[key].is_boolean()) throw InputError(std::string("parameter '") + key + "' must be a boolean");
  return p[key].get<bool>();
}

std::vector<std::string> param_strings(const json& p, const char* key, std::vector<std::string> def) {
  if (!p.is_object() || !p.contains(key)) return def;
  if (!p[key].is_array()) throw InputError(std::string("parameter '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : p[key]) {
    if (!e.is_string()) throw InputError(std::string("parameter '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Numeric space for auction rules: params n (agents) and either types or m.
TypeSpace auction_space(const json& p, int default_n) {
  int n = param_int(p, "n", default_n);
  if (p.is_object() && p.contains("types")) return TypeSpace::uniform(n, param_strings(p, "types", {}));
  int m = param_int(p, "m", 3);
  if (n < 1 || m < 1) throw InputError("n and m must be positive");
  return TypeSpace::numeric(n, m);
}

// Agents ordered by value descending, ties to the lower index.
std::vector<int> ranking(const TypeSpace& s, const Profile& p) {
  std::vector<int> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return s.value(a, p[a]) > s.value(b, p[b]); });
  return order;
}

std::string agent_set(const std::vector<int>& agents) {
  std::string s = "{";
  for (std::size_t j = 0; j < agents.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(agents[j] + 1);
  }
  return s + "}";
}

// Outcome where the given agents each receive one unit and pay the price.
OutcomeSpec auction_outcome(int n, std::vector<int> winners, const Rational& price, bool single) {
  std::sort(winners.begin(), winners.end());
  OutcomeSpec o;
  o.label = single ? "w" + std::to_string(winners[0] + 1) + "@" + price.str() : agent_set(winners) + "@" + price.str();
  Allocation a;
  a.shares.assign(n, Share{});
  for (int w : winners) a.shares[w] = Share{0, price};
  o.allocation = a;
  for (int i = 0; i < n; ++i)
    o.components.push_back(a.shares[i].item >= 0 ? "1@" + price.str() : "0");
  return o;
}

DomainModel auction_model(int units) {
  DomainModel m;
  m.kind = DomainKind::Auction;
  m.objects = {"item"};
  m.units = units;
  return m;
}

// Preference list from a type label: "BAC", "B>A>C", or a prefix such as "B";
// unlisted objects follow in object order.
std::vector<int> parse_preference(const std::string& label, const std::vector<std::string>& objects) {
  std::vector<std::string> parts;
  if (label.find('>') != std::string::npos) {
    std::size_t start = 0;
    while (true) {
      auto e = label.find('>', start);
      parts.push_back(label.substr(start, e - start));
      if (e == std::string::npos) break;
      start = e + 1;
    }
  } else {
    for (char c : label) parts.emplace_back(1, c);
  }
  std::vector<int> pref;
  for (const auto& x : parts) {
    auto it = std::find(objects.begin(), objects.end(), x);
    if (it == objects.end()) throw InputError("type '" + label + "' names an unknown object '" + x + "'");
    int o = static_cast<int>(it - objects.begin());
    if (std::find(pref.begin(), pref.end(), o) != pref.end())
      throw InputError("type '" + label + "' repeats an object");
    pref.push_back(o);
  }
  for (int o = 0; o < static_cast<int>(objects.size()); ++o)
    if (std::find(pref.begin(), pref.end(), o) == pref.end()) pref.push_back(o);
  return pref;
}

std::vector<std::vector<std::vector<int>>> preferences_from_labels(const TypeSpace& s,
                                                                    const std::vector<std::string>& objects) {
  std::vector<std::vector<std::vector<int>>> prefs(s.agents());
  for (int i = 0; i < s.agents(); ++i)
    for (int t = 0; t < s.size(i); ++t) prefs[i].push_back(parse_preference(s.label(i, t), objects));
  return prefs;
}

std::string matching_label(const std::vector<int>& items, const std::vector<std::string>& objects) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += " ";
    s += std::to_string(i + 1) + ":" + (items[i] < 0 ? std::string("-") : objects[items[i]]);
  }
  return s;
}

OutcomeSpec matching_outcome(const std::vector<int>& items, const std::vector<std::string>& objects,
                             const std::string& tag = "") {
  OutcomeSpec o;
  o.label = matching_label(items, objects);
  if (!tag.empty()) o.label += " | " + tag;
  Allocation a;
  a.tag = tag;
  for (int it : items) {
    a.shares.push_back(Share{it, Rational(0)});
    o.components.push_back(it < 0 ? "-" : objects[it]);
  }
  o.allocation = a;
  return o;
}

std::vector<std::string> permutations_of(const std::vector<std::string>& objects) {
  std::vector<int> idx(objects.size());
  std::iota(idx.begin(), idx.end(), 0);
  bool single = std::all_of(objects.begin(), objects.end(), [](const auto& o) { return o.size() == 1; });
  std::vector<std::string> out;
  do {
    std::string s;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (j && !single) s += ">";
      s += objects[idx[j]];
    }
    out.push_back(s);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

std::vector<int> parse_order(const json& p, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (p.is_object() && p.contains("order")) {
    if (!p["order"].is_array()) throw InputError("parameter 'order' must be an array");
    order.clear();
    for (const auto& e : p["order"]) {
      if (!e.is_number_integer()) throw InputError("parameter 'order' must hold agent numbers");
      order.push_back(e.get<int>() - 1);
    }
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i)
      if (sorted.size() != static_cast<std::size_t>(n) || sorted[i] != i)
        throw InputError("parameter 'order' must be a permutation of the agents");
  }
  return order;
}

// Student-proposing deferred acceptance; scores break ties toward lower index.
std::vector<int> deferred_acceptance(const TypeSpace& s, const DomainModel& m, const Profile& p) {
  const int n = s.agents();
  const int k = static_cast<int>(m.objects.size());
  std::vector<int> next(n, 0), match(n, -1);
  std::vector<std::vector<int>> held(k);
  auto score = [&](int i, int c) { return m.scores[i][p[i]][c]; };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (match[i] >= 0) continue;
      const auto& pref = m.preferences[i][p[i]];
      if (next[i] >= static_cast<int>(pref.size())) continue;
      int c = pref[next[i]++];
      held[c].push_back(i);
      std::sort(held[c].begin(), held[c].end(), [&](int a, int b) {
        if (score(a, c) != score(b, c)) return score(a, c) > score(b, c);
        return a < b;
      });
      for (int j : held[c]) match[j] = c;
      while (static_cast<int>(held[c].size()) > m.capacity[c]) {
        match[held[c].back()] = -1;
        held[c].pop_back();
      }
      changed = true;
    }
  }
  return match;
}

Rational share_utility(const DomainModel& m, const TypeSpace& s, int agent, int type, const Share& sh) {
  switch (m.kind) {
    case DomainKind::Auction:
    case DomainKind::DoubleAuction:
      return (sh.item >= 0 ? m.value(s, agent, type) : Rational(0)) - sh.pay;
    case DomainKind::Assignment:
    case DomainKind::House:
    case DomainKind::School: {
      if (sh.item < 0) return Rational(0);
      int r = m.rank(agent, type, sh.item);
      if (r < 0) return Rational(-1);
      return Rational(static_cast<std::int64_t>(m.objects.size()) - r) - sh.pay;
    }
    default:
      throw InputError("model of kind '" + domain_name(m.kind) + "' does not value allocations");
  }
}

bool is_matching_domain(DomainKind k) {
  return k == DomainKind::Assignment || k == DomainKind::House || k == DomainKind::School;
}

// All assignments of objects (or nothing) to agents within capacities.
std::vector<std::vector<int>> feasible_assignments(int n, const DomainModel& m) {
  const int k = static_cast<int>(m.objects.size());
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, -1), load(k, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int c = -1; c < k; ++c) {
      if (c >= 0) {
        int cap = m.capacity.empty() ? 1 : m.capacity[c];
        if (load[c] >= cap) continue;
        ++load[c];
      }
      cur[i] = c;
      rec(i + 1);
      if (c >= 0) --load[c];
    }
  };
  rec(0);
  return out;
}

Rational top_sum(const TypeSpace& s, const DomainModel& m, const Profile& p, int count) {
  std::vector<Rational> v;
  for (int i = 0; i < s.agents(); ++i) v.push_back(m.value(s, i, p[i]));
  std::sort(v.rbegin(), v.rend());
  Rational sum;
  for (int j = 0; j < count && j < static_cast<int>(v.size()); ++j) sum += v[j];
  return sum;
}

bool efficient_at(const TypeSpace& s, const DomainModel& m, const Profile& p, const Allocation& a,
                  Allocation* better) {
  const int n = s.agents();
  if (m.kind == DomainKind::Auction || m.kind == DomainKind::DoubleAuction) {
    int units = m.kind == DomainKind::Auction
                    ? m.units
                    : static_cast<int>(std::count(m.endowment.begin(), m.endowment.end(), 1));
    int held = 0;
    Rational sum;
    for (int i = 0; i < n; ++i)
      if (a.shares[i].item >= 0) {
        ++held;
        sum += m.value(s, i, p[i]);
      }
    if (held == units && sum == top_sum(s, m, p, units)) return true;
    if (better) {
      Allocation b;
      b.shares.assign(n, Share{});
      auto order = ranking(s, p);
      if (!m.values.empty()) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int x, int y) { return m.value(s, x, p[x]) > m.value(s, y, p[y]); });
      }
      for (int j = 0; j < units && j < n; ++j) b.shares[order[j]].item = 0;
      *better = b;
    }
    return false;
  }
  if (!is_matching_domain(m.kind)) throw InputError("efficiency is not defined for this model");
  std::vector<Rational> u(n);
  for (int i = 0; i < n; ++i) u[i] = share_utility(m, s, i, p[i], a.shares[i]);
  for (const auto& mu : feasible_assignments(n, m)) {
    bool weakly = true, strictly = false;
    for (int i = 0; i < n && weakly; ++i) {
      Rational v = share_utility(m, s, i, p[i], Share{mu[i], a.shares[i].pay});
      if (v < u[i]) weakly = false;
      if (v > u[i]) strictly = true;
    }
    if (weakly && strictly) {
      if (better) {
        Allocation b = a;
        for (int i = 0; i < n; ++i) b.shares[i].item = mu[i];
        *better = b;
      }
      return false;
    }
  }
  return true;
}

bool ir_at(const TypeSpace& s, const DomainModel& m, const Profile& p, const Allocation& a, int* agent) {
  for (int i = 0; i < s.agents(); ++i) {
    Share outside;
    switch (m.kind) {
      case DomainKind::House:
        if (m.endowment.empty()) throw InputError("individual rationality needs endowments");
        outside.item = m.endowment[i];
        break;
      case DomainKind::Auction:
        break;
      case DomainKind::DoubleAuction:
        outside.item = m.endowment.at(i) == 1 ? 0 : -1;
        break;
      default:
        throw InputError("individual rationality is not defined for this model");
    }
    if (share_utility(m, s, i, p[i], a.shares[i]) < share_utility(m, s, i, p[i], outside)) {
      if (agent) *agent = i;
      return false;
    }
  }
  return true;
}

bool stable_at(const TypeSpace& s, const DomainModel& m, const Profile& p, const Allocation& a, int* agent,
               int* object) {
  if (m.kind != DomainKind::School || m.scores.empty() || m.capacity.empty())
    throw InputError("stability needs a school model with scores and capacities");
  const int n = s.agents();
  const int k = static_cast<int>(m.objects.size());
  std::vector<int> load(k, 0);
  for (int i = 0; i < n; ++i)
    if (a.shares[i].item >= 0) ++load[a.shares[i].item];
  for (int i = 0; i < n; ++i) {
    Rational cur = share_utility(m, s, i, p[i], a.shares[i]);
    for (int c = 0; c < k; ++c) {
      if (share_utility(m, s, i, p[i], Share{c, Rational(0)}) <= cur) continue;
      bool blocks = load[c] < m.capacity[c];
      for (int j = 0; j < n && !blocks; ++j)
        if (j != i && a.shares[j].item == c && m.scores[i][p[i]][c] > m.scores[j][p[j]][c]) blocks = true;
      if (blocks) {
        if (agent) *agent = i;
        if (object) *object = c;
        return false;
      }
    }
  }
  return true;
}

const Allocation& require_allocation(const ChoiceRule& rule, int x) {
  if (!rule.has_allocations()) throw InputError("rule outcomes carry no allocations");
  return rule.allocation(x);
}

// Groups agent's types by key; nullopt when fewer than two groups.
std::optional<Query> elicit_by(const TypeSpace& s, int agent, const std::function<int(int)>& key) {
  std::map<int, std::vector<int>> groups;
  for (int t = 0; t < s.size(agent); ++t) groups[key(t)].push_back(t);
  if (groups.size() < 2) return std::nullopt;
  std::vector<std::vector<int>> cells;
  for (auto& [k, v] : groups) cells.push_back(v);
  return Query::elicit(agent, cells);
}

std::vector<int> types_by_value_ascending(const TypeSpace& s) {
  std::vector<int> t(s.size(0));
  std::iota(t.begin(), t.end(), 0);
  std::stable_sort(t.begin(), t.end(), [&](int a, int b) { return s.value(0, a) < s.value(0, b); });
  return t;
}

Builtin rule_serial_dictatorship(const json& params, const std::optional<TypeSpace>& given) {
  auto objects = param_strings(params, "objects", {"A", "B"});
  if (objects.empty()) throw InputError("serial dictatorship needs objects");
  TypeSpace s = given ? *given : TypeSpace::uniform(param_int(params, "n", 2), permutations_of(objects));
  auto order = parse_order(params, s.agents());
  DomainModel m;
  m.kind = DomainKind::Assignment;
  m.objects = objects;
  m.preferences = preferences_from_labels(s, objects);
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    std::vector<int> items(s.agents(), -1);
    std::vector<char> taken(objects.size(), 0);
    for (int i : order)
      for (int c : m.preferences[i][p[i]])
        if (!taken[c]) {
          taken[c] = 1;
          items[i] = c;
          break;
        }
    return matching_outcome(items, objects);
  });
  return {rule, m};
}

Builtin rule_fair(const std::optional<TypeSpace>& given) {
  TypeSpace s = given ? *given : TypeSpace::uniform(2, {"A", "B"});
  if (s.agents() != 2 || s.alphabet(0) != std::vector<std::string>{"A", "B"} || !s.common_alphabet())
    throw InputError("fair_tiebreak_2x2 needs two agents with types A, B");
  DomainModel m;
  m.kind = DomainKind::Assignment;
  m.objects = {"A", "B"};
  m.preferences = preferences_from_labels(s, m.objects);
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    bool swap = p[0] == 1 && p[1] == 0;
    OutcomeSpec o = matching_outcome(swap ? std::vector<int>{1, 0} : std::vector<int>{0, 1}, m.objects);
    o.label = swap ? "x'" : "x";
    return o;
  });
  return {rule, m};
}

Builtin rule_auction(const std::string& name, const json& params, const std::optional<TypeSpace>& given) {
  TypeSpace s = given ? *given : auction_space(params, name == "first_price" ? 2 : 3);
  const int n = s.agents();
  int k = param_int(params, "k", 2);
  if (name == "kth_price" && (k < 2 || k > n)) throw InputError("kth_price needs 2 <= k <= n");
  if (name == "rank_payment" && (k < 1 || k > n)) throw InputError("rank_payment needs 1 <= k <= n");
  if (name == "second_price" && n < 2) throw InputError("second_price needs at least two agents");
  int units = name == "kth_price" ? k - 1 : 1;
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    auto order = ranking(s, p);
    if (name == "first_price") return auction_outcome(n, {order[0]}, s.value(order[0], p[order[0]]), true);
    if (name == "second_price") return auction_outcome(n, {order[0]}, order_stat(s, p, 2), true);
    if (name == "rank_payment") return auction_outcome(n, {order[0]}, order_stat(s, p, k), true);
    std::vector<int> winners(order.begin(), order.begin() + units);
    return auction_outcome(n, winners, order_stat(s, p, k), false);
  });
  return {rule, auction_model(units)};
}

Builtin rule_walrasian(const json& params, const std::optional<TypeSpace>& given) {
  TypeSpace s = given ? *given : TypeSpace::numeric(2 * param_int(params, "m", 2), param_int(params, "types", 2));
  const int n = s.agents();
  if (n % 2 != 0 || n < 2) throw InputError("double auction needs an even number of agents");
  const int m = n / 2;
  std::string sel = param_str(params, "price", "lower");
  if (sel != "lower" && sel != "upper") throw InputError("parameter 'price' must be 'lower' or 'upper'");
  bool price_only = param_bool(params, "price_only", false);
  DomainModel model;
  model.kind = DomainKind::DoubleAuction;
  model.objects = {"unit"};
  model.endowment.assign(n, 0);
  for (int i = m; i < n; ++i) model.endowment[i] = 1;
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    Rational hi = order_stat(s, p, m), lo = order_stat(s, p, m + 1);
    Rational t = sel == "lower" ? lo : hi;
    std::vector<int> holders;
    for (int i = 0; i < n; ++i)
      if (s.value(i, p[i]) > t) holders.push_back(i);
    std::vector<int> tied;
    for (int i = m; i < n; ++i)
      if (s.value(i, p[i]) == t) tied.push_back(i);
    for (int i = 0; i < m; ++i)
      if (s.value(i, p[i]) == t) tied.push_back(i);
    for (int i : tied)
      if (static_cast<int>(holders.size()) < m) holders.push_back(i);
    std::sort(holders.begin(), holders.end());
    OutcomeSpec o;
    o.label = price_only ? "t=" + t.str() : "H" + agent_set(holders) + "@" + t.str();
    Allocation a;
    a.tag = "t=" + t.str();
    for (int i = 0; i < n; ++i) {
      bool holds = std::find(holders.begin(), holders.end(), i) != holders.end();
      Rational pay = holds && model.endowment[i] == 0 ? t : (!holds && model.endowment[i] == 1 ? -t : Rational(0));
      a.shares.push_back(Share{holds ? 0 : -1, pay});
      o.components.push_back(price_only ? "t=" + t.str() : (holds ? "1" : "0") + std::string("@") + pay.str());
    }
    o.allocation = a;
    return o;
  });
  return {rule, model};
}

Builtin rule_inseparable(const std::optional<TypeSpace>& given) {
  TypeSpace s = given ? *given : TypeSpace::uniform(2, {"θ1", "θ2", "θ3"});
  if (s.agents() != 2 || s.size(0) != 3 || s.size(1) != 3) throw InputError("inseparable_3x3 needs a 3x3 space");
  const std::set<std::pair<int, int>> shaded{{2, 0}, {2, 1}, {0, 1}, {0, 2}};
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    OutcomeSpec o;
    o.label = shaded.count({p[0], p[1]}) ? "x" : "y" + std::to_string(p[0] + 1) + std::to_string(p[1] + 1);
    return o;
  });
  return {rule, DomainModel{}};
}

Builtin rule_non_clinching(const std::optional<TypeSpace>& given) {
  TypeSpace s = given ? *given : TypeSpace::uniform(2, {"lo", "hi"});
  if (s.agents() != 2 || s.size(0) != 2 || s.size(1) != 2) throw InputError("non_clinching needs a 2x2 space");
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    OutcomeSpec o;
    o.label = "x" + std::to_string(1 + 2 * p[0] + p[1]);
    return o;
  });
  // Outcome ids follow x1..x4 because tabulation visits profiles in index order.
  DomainModel m;
  m.kind = DomainKind::Ordinal;
  m.outcome_ranking = {{{0, 2, 1, 3}, {3, 1, 2, 0}}, {{0, 1, 2, 3}, {3, 2, 1, 0}}};
  return {rule, m};
}

// Two trading agents with an "own" and an "other" type plus passive agents that
// like their endowment best. Objects o1..on, agent i endowed with o_i.
TypeSpace house_space(int n) {
  std::vector<std::vector<std::string>> alpha(n);
  alpha[0] = {"own", "other"};
  alpha[1] = {"own", "other"};
  for (int i = 2; i < n; ++i) alpha[i] = {"own"};
  return TypeSpace(alpha);
}

DomainModel house_model(int n) {
  DomainModel m;
  m.kind = DomainKind::House;
  for (int i = 0; i < n; ++i) m.objects.push_back("o" + std::to_string(i + 1));
  m.endowment.resize(n);
  std::iota(m.endowment.begin(), m.endowment.end(), 0);
  m.preferences.resize(n);
  auto with_front = [&](std::vector<int> front) {
    for (int c = 0; c < n; ++c)
      if (std::find(front.begin(), front.end(), c) == front.end()) front.push_back(c);
    return front;
  };
  m.preferences[0] = {with_front({0, 1}), with_front({1, 0})};
  m.preferences[1] = {with_front({1, 0}), with_front({0, 1})};
  for (int i = 2; i < n; ++i) m.preferences[i] = {with_front({i})};
  return m;
}

Builtin rule_keep_endowments(const json& params) {
  int n = param_int(params, "n", 3);
  if (n < 2) throw InputError("house instance needs at least two agents");
  TypeSpace s = house_space(n);
  DomainModel m = house_model(n);
  auto rule = ChoiceRule::tabulate(s, [&](const Profile&) { return matching_outcome(m.endowment, m.objects); });
  return {rule, m};
}

// Two students, schools a and b with one seat each, every student prefers a.
// Scores at a: s1 = 4 > s2' = 3 > s1' = 2 > s2 = 1; nobody scores at b.
DomainModel school_model_4(const TypeSpace& s) {
  DomainModel m;
  m.kind = DomainKind::School;
  m.objects = {"a", "b"};
  m.capacity = {1, 1};
  const std::map<std::string, int> score{{"s1", 4}, {"s2'", 3}, {"s1'", 2}, {"s2", 1}};
  m.preferences.assign(2, {});
  m.scores.assign(2, {});
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < s.size(i); ++t) {
      m.preferences[i].push_back({0, 1});
      auto it = score.find(s.label(i, t));
      if (it == score.end()) throw InputError("unknown school type " + s.label(i, t));
      m.scores[i].push_back({Rational(it->second), Rational(0)});
    }
  return m;
}

TypeSpace school_space_4() { return TypeSpace({{"s1", "s1'"}, {"s2", "s2'"}}); }

TypeSpace four_profile_space() {
  TypeSpace full = TypeSpace::uniform(2, {"s1", "s1'", "s2", "s2'"});
  return full.restricted_to([](const Profile& p) { return p[0] <= 1 && p[1] >= 2; });
}

Builtin rule_school_da(const TypeSpace& s, const DomainModel& m) {
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    return matching_outcome(deferred_acceptance(s, m, p), m.objects);
  });
  return {rule, m};
}

// Eight types per student: preference (ab or ba) x score at a x score at b.
TypeSpace multicount_space_full() {
  std::vector<std::string> alpha;
  for (std::string pref : {"ab", "ba"})
    for (int sa = 1; sa <= 2; ++sa)
      for (int sb = 1; sb <= 2; ++sb) alpha.push_back(pref + std::to_string(sa) + std::to_string(sb));
  return TypeSpace::uniform(2, alpha);
}

DomainModel multicount_model(const TypeSpace& s) {
  DomainModel m;
  m.kind = DomainKind::School;
  m.objects = {"a", "b"};
  m.capacity = {1, 1};
  for (int i = 0; i < s.agents(); ++i) {
    m.preferences.emplace_back();
    m.scores.emplace_back();
    for (int t = 0; t < s.size(i); ++t) {
      const std::string& l = s.label(i, t);
      m.preferences[i].push_back(l.substr(0, 2) == "ab" ? std::vector<int>{0, 1} : std::vector<int>{1, 0});
      m.scores[i].push_back({Rational(l[2] - '0'), Rational(l[3] - '0')});
    }
  }
  return m;
}

std::vector<std::array<int, 2>> cutoff_grid() {
  std::vector<std::array<int, 2>> g;
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) g.push_back({a, b});
  return g;
}

// Favorite school among those whose cutoff the type meets, -1 if none.
int favorite_eligible(const DomainModel& m, int agent, int type, const std::array<int, 2>& sigma,
                      const std::vector<char>& open) {
  for (int c : m.preferences[agent][type])
    if (open[c] && m.scores[agent][type][c] >= Rational(sigma[c])) return c;
  return -1;
}

std::vector<int> demand(const TypeSpace& s, const DomainModel& m, const Profile& p, const std::array<int, 2>& sigma) {
  std::vector<int> d(2, 0);
  for (int i = 0; i < s.agents(); ++i) {
    int c = favorite_eligible(m, i, p[i], sigma, {1, 1});
    if (c >= 0) ++d[c];
  }
  return d;
}

std::optional<std::array<int, 2>> first_clearing(const TypeSpace& s, const DomainModel& m, const Profile& p) {
  for (auto sigma : cutoff_grid())
    if (demand(s, m, p, sigma) == std::vector<int>{m.capacity[0], m.capacity[1]}) return sigma;
  return std::nullopt;
}

std::string sigma_tag(const std::array<int, 2>& sigma) {
  return "σ=(" + std::to_string(sigma[0]) + "," + std::to_string(sigma[1]) + ")";
}

Builtin rule_multicount_stable() {
  TypeSpace full = multicount_space_full();
  DomainModel m = multicount_model(full);
  TypeSpace s = full.restricted_to([&](const Profile& p) { return first_clearing(full, m, p).has_value(); });
  auto rule = ChoiceRule::tabulate(s, [&](const Profile& p) {
    auto sigma = *first_clearing(s, m, p);
    std::vector<char> open{1, 1};
    std::vector<int> items(s.agents(), -1);
    for (int i = 0; i < s.agents(); ++i) {
      items[i] = favorite_eligible(m, i, p[i], sigma, open);
      if (items[i] >= 0) open[items[i]] = 0;
    }
    return matching_outcome(items, m.objects, sigma_tag(sigma));
  });
  return {rule, m};
}

Builtin rule_nine_types() {
  TypeSpace s({{"θ5", "θ0", "θ2"}, {"θ8", "θ7", "θ3"}, {"θ6", "θ4", "θ1"}});
  return rule_auction("second_price", json::object(), s);
}

}  // namespace

std::string domain_name(DomainKind k) {
  switch (k) {
    case DomainKind::None:
      return "none";
    case DomainKind::Auction:
      return "auction";
    case DomainKind::Assignment:
      return "assignment";
    case DomainKind::House:
      return "house";
    case DomainKind::School:
      return "school";
    case DomainKind::DoubleAuction:
      return "double_auction";
    case DomainKind::Ordinal:
      return "ordinal";
  }
  return "none";
}

DomainKind parse_domain(const std::string& s) {
  for (auto k : {DomainKind::None, DomainKind::Auction, DomainKind::Assignment, DomainKind::House,
                 DomainKind::School, DomainKind::DoubleAuction, DomainKind::Ordinal})
    if (domain_name(k) == s) return k;
  throw InputError("unknown model kind '" + s + "'");
}

Rational DomainModel::value(const TypeSpace& space, int agent, int type) const {
  if (!values.empty()) return values.at(agent).at(type);
  return space.value(agent, type);
}

int DomainModel::rank(int agent, int type, int object) const {
  if (preferences.empty()) throw InputError("model has no preferences");
  const auto& pref = preferences.at(agent).at(type);
  auto it = std::find(pref.begin(), pref.end(), object);
  return it == pref.end() ? -1 : static_cast<int>(it - pref.begin());
}

Rational outcome_utility(const DomainModel& m, const ChoiceRule& rule, int agent, int type, int x) {
  if (m.kind == DomainKind::Ordinal) {
    if (m.outcome_ranking.empty()) throw InputError("ordinal model has no outcome rankings");
    const auto& r = m.outcome_ranking.at(agent).at(type);
    auto it = std::find(r.begin(), r.end(), x);
    if (it == r.end()) throw InputError("outcome ranking misses outcome " + rule.outcome_label(x));
    return Rational(-static_cast<std::int64_t>(it - r.begin()));
  }
  return share_utility(m, rule.space(), agent, type, require_allocation(rule, x).shares.at(agent));
}

Rational order_stat(const TypeSpace& space, const Profile& p, int k) {
  std::vector<Rational> v;
  for (int i = 0; i < space.agents(); ++i) v.push_back(space.value(i, p[i]));
  std::sort(v.rbegin(), v.rend());
  if (k < 1 || k > static_cast<int>(v.size())) throw InputError("order statistic out of range");
  return v[k - 1];
}

TypeSpace restrict_distinct_order_stats(const TypeSpace& space, int k) {
  if (k < 1 || k >= space.agents()) throw InputError("restriction needs 1 <= k < n");
  return space.restricted_to([&](const Profile& p) { return order_stat(space, p, k) != order_stat(space, p, k + 1); });
}

Builtin builtin_rule(const std::string& name, const json& params, const std::optional<TypeSpace>& space) {
  if (name == "serial_dictatorship") return rule_serial_dictatorship(params, space);
  if (name == "fair_tiebreak_2x2") return rule_fair(space);
  if (name == "first_price" || name == "second_price" || name == "kth_price" || name == "rank_payment")
    return rule_auction(name, params, space);
  if (name == "double_auction_walrasian") return rule_walrasian(params, space);
  if (name == "inseparable_3x3") return rule_inseparable(space);
  if (name == "non_clinching") return rule_non_clinching(space);
  if (name == "keep_endowments") {
    if (space) throw InputError("keep_endowments defines its own space");
    return rule_keep_endowments(params);
  }
  if (name == "second_price_nine_types") {
    if (space) throw InputError("second_price_nine_types defines its own space");
    return rule_nine_types();
  }
  if (name == "school_da") {
    TypeSpace s = space ? *space : school_space_4();
    return rule_school_da(s, school_model_4(s));
  }
  if (name == "school_four_profiles") {
    if (space) throw InputError("school_four_profiles defines its own space");
    TypeSpace s = four_profile_space();
    return rule_school_da(s, school_model_4(s));
  }
  if (name == "multicount_stable") {
    if (space) throw InputError("multicount_stable defines its own space");
    return rule_multicount_stable();
  }
  throw InputError("unknown builtin rule '" + name + "'");
}

std::vector<std::string> builtin_rule_names() {
  return {"serial_dictatorship", "fair_tiebreak_2x2", "first_price",     "second_price",
          "kth_price",           "rank_payment",      "double_auction_walrasian", "inseparable_3x3",
          "non_clinching",       "keep_endowments",   "second_price_nine_types",      "school_da",
          "school_four_profiles",         "multicount_stable"};
}

std::string property_name(Property p) {
  switch (p) {
    case Property::Efficient:
      return "efficient";
    case Property::IndividuallyRational:
      return "ir";
    case Property::Stable:
      return "stable";
    case Property::Strategyproof:
      return "sp";
  }
  return {};
}

Property parse_property(const std::string& s) {
  if (s == "efficient") return Property::Efficient;
  if (s == "ir" || s == "individually_rational") return Property::IndividuallyRational;
  if (s == "stable") return Property::Stable;
  if (s == "sp" || s == "strategyproof") return Property::Strategyproof;
  throw InputError("unknown property '" + s + "'");
}

std::vector<ChoiceRule> constrained_family(const TypeSpace& space, const DomainModel& model,
                                           const std::vector<std::pair<std::string, Allocation>>& universe,
                                           const std::vector<Property>& props, std::size_t cap) {
  std::vector<std::size_t> profiles = space.support().members();
  std::vector<std::vector<int>> allowed(profiles.size());
  std::size_t total = 1;
  for (std::size_t e = 0; e < profiles.size(); ++e) {
    Profile p = space.profile(profiles[e]);
    for (int u = 0; u < static_cast<int>(universe.size()); ++u) {
      const Allocation& a = universe[u].second;
      bool ok = true;
      for (Property pr : props) {
        if (!ok) break;
        switch (pr) {
          case Property::Efficient:
            ok = efficient_at(space, model, p, a, nullptr);
            break;
          case Property::IndividuallyRational:
            ok = ir_at(space, model, p, a, nullptr);
            break;
          case Property::Stable:
            ok = stable_at(space, model, p, a, nullptr, nullptr);
            break;
          case Property::Strategyproof:
            throw InputError("strategyproofness is not a pointwise constraint");
        }
      }
      if (ok) allowed[e].push_back(u);
    }
    if (allowed[e].empty()) return {};
    if (total > cap / allowed[e].size()) throw ResourceError("constrained family exceeds cap");
    total *= allowed[e].size();
  }
  std::vector<std::string> labels;
  std::vector<Allocation> allocs;
  for (const auto& [l, a] : universe) {
    labels.push_back(l);
    allocs.push_back(a);
  }
  std::vector<ChoiceRule> out;
  std::vector<std::size_t> pos(profiles.size(), 0);
  while (true) {
    std::vector<int> table(space.profile_count(), -1);
    for (std::size_t e = 0; e < profiles.size(); ++e) table[profiles[e]] = allowed[e][pos[e]];
    ChoiceRule r(space, labels, table);
    r.set_allocations(allocs);
    std::vector<std::vector<std::string>> comp_labels(space.agents());
    std::vector<std::vector<int>> per(space.agents(), std::vector<int>(space.profile_count(), -1));
    for (int i = 0; i < space.agents(); ++i) {
      comp_labels[i].push_back("-");
      for (const auto& o : model.objects) comp_labels[i].push_back(o);
      for (std::size_t k : profiles) per[i][k] = allocs[table[k]].shares[i].item + 1;
    }
    if (!model.objects.empty()) r.set_components(comp_labels, per);
    out.push_back(std::move(r));
    int e = static_cast<int>(profiles.size()) - 1;
    while (e >= 0 && ++pos[e] == allowed[e].size()) pos[e--] = 0;
    if (e < 0) break;
  }
  return out;
}

std::vector<Builtin> builtin_family(const std::string& name, const json& params) {
  auto matchings = [](int n, const DomainModel& m) {
    std::vector<std::pair<std::string, Allocation>> u;
    for (const auto& mu : feasible_assignments(n, m)) {
      auto o = matching_outcome(mu, m.objects);
      u.emplace_back(o.label, *o.allocation);
    }
    return u;
  };
  std::vector<Builtin> out;
  if (name == "efficient_2x2") {
    Builtin fair = rule_fair(std::nullopt);
    std::vector<std::pair<std::string, Allocation>> u{{"x", *matching_outcome({0, 1}, fair.model.objects).allocation},
                                                      {"x'", *matching_outcome({1, 0}, fair.model.objects).allocation}};
    for (auto& r : constrained_family(fair.rule.space(), fair.model, u, {Property::Efficient}))
      out.push_back({std::move(r), fair.model});
    return out;
  }
  if (name == "house_ir_efficient") {
    int n = param_int(params, "n", 3);
    if (n < 2 || n > 5) throw InputError("house family needs 2 <= n <= 5");
    TypeSpace s = house_space(n);
    DomainModel m = house_model(n);
    for (auto& r : constrained_family(s, m, matchings(n, m), {Property::IndividuallyRational, Property::Efficient}))
      out.push_back({std::move(r), m});
    return out;
  }
  if (name == "school_stable") {
    TypeSpace s = school_space_4();
    DomainModel m = school_model_4(s);
    for (auto& r : constrained_family(s, m, matchings(2, m), {Property::Stable})) out.push_back({std::move(r), m});
    return out;
  }
  throw InputError("unknown builtin family '" + name + "'");
}

std::vector<std::string> builtin_family_names() { return {"efficient_2x2", "house_ir_efficient", "school_stable"}; }

PropertyVerdict check_rule_property(const ChoiceRule& rule, const DomainModel& model, Property prop) {
  const TypeSpace& s = rule.space();
  PropertyVerdict v;
  auto fail = [&](std::size_t k, const std::string& msg) {
    v.holds = false;
    v.profile = k;
    v.message = msg;
  };
  if (model.kind == DomainKind::None) throw InputError("property checks need a model");
  if (prop == Property::Strategyproof) {
    for (int i = 0; i < s.agents() && v.holds; ++i) {
      auto hit = [&](std::size_t k) -> int {
        if (!s.in_support(k)) return -1;
        int t = s.coord(k, i);
        Rational truth = outcome_utility(model, rule, i, t, rule.outcome(k));
        for (int u = 0; u < s.size(i); ++u) {
          std::size_t k2 = s.with_coord(k, i, u);
          if (u == t || !s.in_support(k2)) continue;
          if (outcome_utility(model, rule, i, t, rule.outcome(k2)) > truth) return u;
        }
        return -1;
      };
      for (std::size_t k = 0; k < s.profile_count(); ++k) {
        int u = hit(k);
        if (u >= 0) {
          fail(k, "agent " + std::to_string(i + 1) + " gains by reporting " + s.label(i, u));
          v.agent = i;
          v.other = s.with_coord(k, i, u);
          break;
        }
      }
    }
    return v;
  }
  if (prop == Property::Efficient && model.kind == DomainKind::Ordinal) {
    for (std::size_t k = 0; k < s.profile_count() && v.holds; ++k) {
      if (!s.in_support(k)) continue;
      Profile p = s.profile(k);
      int x = rule.outcome(k);
      for (int y = 0; y < rule.outcome_count(); ++y) {
        bool weakly = true, strictly = false;
        for (int i = 0; i < s.agents(); ++i) {
          Rational a = outcome_utility(model, rule, i, p[i], y), b = outcome_utility(model, rule, i, p[i], x);
          if (a < b) weakly = false;
          if (a > b) strictly = true;
        }
        if (weakly && strictly) {
          fail(k, "outcome " + rule.outcome_label(y) + " Pareto dominates " + rule.outcome_label(x));
          break;
        }
      }
    }
    return v;
  }
  for (std::size_t k = 0; k < s.profile_count(); ++k) {
    if (!s.in_support(k)) continue;
    Profile p = s.profile(k);
    const Allocation& a = require_allocation(rule, rule.outcome(k));
    switch (prop) {
      case Property::Efficient: {
        Allocation b;
        if (!efficient_at(s, model, p, a, &b)) {
          fail(k, "allocation is not efficient");
          v.better = b;
          return v;
        }
        break;
      }
      case Property::IndividuallyRational: {
        int i = -1;
        if (!ir_at(s, model, p, a, &i)) {
          fail(k, "agent " + std::to_string(i + 1) + " prefers the outside option");
          v.agent = i;
          return v;
        }
        break;
      }
      case Property::Stable: {
        int i = -1, c = -1;
        if (!stable_at(s, model, p, a, &i, &c)) {
          fail(k, "agent " + std::to_string(i + 1) + " and " + model.objects[c] + " block");
          v.agent = i;
          v.object = c;
          return v;
        }
        break;
      }
      default:
        break;
    }
  }
  return v;
}

OspVerdict check_protocol_osp(const Protocol& p, const ChoiceRule& rule, const DomainModel& model) {
  require_implements(p, rule);
  const TypeSpace& s = rule.space();
  OspVerdict v;
  for (int node = 0; node < p.size(); ++node) {
    const Node& nd = p.node(node);
    if (nd.children.empty()) continue;
    int agent = -1;
    if (nd.query && nd.query->kind == QueryKind::Elicit)
      agent = nd.query->agent;
    else {
      auto c = classify_query(p, node);
      if (c.cls != QueryClass::Elicit) throw InputError("obvious strategyproofness needs individual elicitation queries");
      agent = c.agent;
    }
    const std::size_t nc = nd.children.size();
    for (std::size_t c = 0; c < nc; ++c) {
      const ProfileSet& lbl = p.node(nd.children[c]).label;
      for (int t : projection(s, lbl, agent)) {
        std::optional<Rational> worst;
        lbl.for_each([&](std::size_t k) {
          if (s.coord(k, agent) != t) return;
          Rational u = outcome_utility(model, rule, agent, t, rule.outcome(k));
          if (!worst || u < *worst) worst = u;
        });
        for (std::size_t d = 0; d < nc; ++d) {
          if (d == c) continue;
          std::optional<Rational> best;
          p.node(nd.children[d]).label.for_each([&](std::size_t k) {
            Rational u = outcome_utility(model, rule, agent, t, rule.outcome(k));
            if (!best || u > *best) best = u;
          });
          if (*best > *worst) {
            v.holds = false;
            v.node = node;
            v.agent = agent;
            v.type = t;
            v.truthful = nd.children[c];
            v.deviation = nd.children[d];
            return v;
          }
        }
      }
    }
  }
  return v;
}

namespace {

BuiltinProtocol protocol_serial_dictatorship(const json& params) {
  Builtin b = rule_serial_dictatorship(params, std::nullopt);
  const TypeSpace& s = b.rule.space();
  auto order = parse_order(params, s.agents());
  ProtocolBuilder pb(s);
  std::function<void(int, std::size_t, std::vector<char>)> rec = [&](int v, std::size_t r, std::vector<char> open) {
    if (r == order.size() || std::none_of(open.begin(), open.end(), [](char c) { return c; })) return;
    int i = order[r];
    auto fav = [&](int t) {
      for (int c : b.model.preferences[i][t])
        if (open[c]) return c;
      return -1;
    };
    auto q = elicit_by(s, i, fav);
    if (!q) {
      int c = fav(0);
      open[c] = 0;
      rec(v, r + 1, open);
      return;
    }
    for (auto [cell, child] : pb.split(v, *q)) {
      auto next = open;
      next[fav(q->cells[cell][0])] = 0;
      rec(child, r + 1, next);
    }
  };
  rec(pb.root(), 0, std::vector<char>(b.model.objects.size(), 1));
  return {std::move(pb).build(), b.rule, b.model, std::nullopt};
}

BuiltinProtocol protocol_descending(const json& params) {
  Builtin b = rule_auction("first_price", params, std::nullopt);
  const TypeSpace& s = b.rule.space();
  if (!s.common_alphabet()) throw InputError("descending protocol needs a common alphabet");
  auto levels = types_by_value_ascending(s);
  std::reverse(levels.begin(), levels.end());
  ProtocolBuilder pb(s);
  int v = pb.root();
  bool done = false;
  for (int theta : levels) {
    for (int i = 0; i < s.agents() && !done; ++i) {
      if (s.size(i) < 2) continue;
      auto kids = pb.split(v, Query::elicit_in(s, i, {theta}));
      if (kids.size() == 1) {
        if (kids[0].first == 0) done = true;
        continue;
      }
      v = kids[1].second;
    }
    if (done) break;
  }
  return {std::move(pb).build(), b.rule, b.model, std::nullopt};
}

// Ascending count protocol: at each level theta ask whether exactly k agents
// have a type above theta; on "yes" elicit "above theta?" from agents in order.
BuiltinProtocol count_protocol(const TypeSpace& s, int k, const ChoiceRule& rule, const DomainModel& model) {
  const int n = s.agents();
  auto levels = types_by_value_ascending(s);
  ProtocolBuilder pb(s);
  std::vector<int> phase;
  int v = pb.root();
  for (int theta : levels) {
    std::vector<int> above;
    for (int t = 0; t < s.size(0); ++t)
      if (s.value(0, t) > s.value(0, theta)) above.push_back(t);
    std::vector<int> rest;
    for (int c = 0; c <= n; ++c)
      if (c != k) rest.push_back(c);
    if (std::find(phase.begin(), phase.end(), v) == phase.end()) phase.push_back(v);
    auto kids = pb.split(v, Query::count(above, {{k}, rest}));
    int clearing = -1, next = -1;
    for (auto [cell, child] : kids) {
      if (child != v && std::find(phase.begin(), phase.end(), child) == phase.end()) phase.push_back(child);
      (cell == 0 ? clearing : next) = child;
    }
    if (clearing >= 0) {
      std::function<void(int, int, int)> elicit = [&](int u, int i, int yes) {
        if (yes == k || i == n) return;
        auto q = Query::elicit_in(s, i, above);
        auto ch = pb.split(u, q);
        for (auto [cell, child] : ch) elicit(child, i + 1, yes + (cell == 0 ? 1 : 0));
      };
      elicit(clearing, 0, 0);
    }
    if (next < 0 || next == clearing) break;
    v = next;
  }
  std::sort(phase.begin(), phase.end());
  Protocol p = std::move(pb).build();
  p.suggested_phase = phase;
  return {std::move(p), rule, model, phase};
}

BuiltinProtocol protocol_count_ascending(const json& params) {
  int k = param_int(params, "k", 1);
  TypeSpace full = auction_space(params, 3);
  if (k < 1 || k + 1 > full.agents()) throw InputError("count_ascending_kplus1_price needs 1 <= k < n");
  TypeSpace s = restrict_distinct_order_stats(full, k);
  Builtin b = k == 1 ? rule_auction("second_price", params, s)
                     : rule_auction("kth_price", json{{"k", k + 1}}, s);
  return count_protocol(s, k, b.rule, b.model);
}

BuiltinProtocol protocol_double_auction(const json& params) {
  int m = param_int(params, "m", 2);
  TypeSpace full = TypeSpace::numeric(2 * m, param_int(params, "types", 3));
  TypeSpace s = restrict_distinct_order_stats(full, m);
  Builtin b = rule_walrasian(json{{"price", "lower"}}, s);
  return count_protocol(s, m, b.rule, b.model);
}

BuiltinProtocol protocol_multicount() {
  Builtin b = rule_multicount_stable();
  const TypeSpace& s = b.rule.space();
  const DomainModel& m = b.model;
  ProtocolBuilder pb(s);
  std::vector<int> phase;
  int v = pb.root();
  const int n = s.agents();
  for (auto sigma : cutoff_grid()) {
    std::vector<std::vector<int>> subsets(2);
    for (int t = 0; t < s.size(0); ++t) {
      int c = favorite_eligible(m, 0, t, sigma, {1, 1});
      if (c >= 0) subsets[c].push_back(t);
    }
    std::vector<std::vector<int>> rest;
    for (int a = 0; a <= n; ++a)
      for (int c = 0; c <= n; ++c)
        if (!(a == m.capacity[0] && c == m.capacity[1])) rest.push_back({a, c});
    if (std::find(phase.begin(), phase.end(), v) == phase.end()) phase.push_back(v);
    auto kids = pb.split(v, Query::multicount(subsets, {{{m.capacity[0], m.capacity[1]}}, rest}));
    int clearing = -1, next = -1;
    for (auto [cell, child] : kids) {
      if (child != v && std::find(phase.begin(), phase.end(), child) == phase.end()) phase.push_back(child);
      (cell == 0 ? clearing : next) = child;
    }
    if (clearing >= 0) {
      std::function<void(int, int, std::vector<char>)> pick = [&](int u, int i, std::vector<char> open) {
        if (i == n) return;
        auto key = [&](int t) { return favorite_eligible(m, i, t, sigma, open); };
        auto q = elicit_by(s, i, key);
        if (!q) {
          auto nx = open;
          int c = key(0);
          if (c >= 0) nx[c] = 0;
          pick(u, i + 1, nx);
          return;
        }
        for (auto [cell, child] : pb.split(u, *q)) {
          auto nx = open;
          int c = key(q->cells[cell][0]);
          if (c >= 0) nx[c] = 0;
          pick(child, i + 1, nx);
        }
      };
      pick(clearing, 0, {1, 1});
    }
    if (next < 0 || next == clearing) break;
    v = next;
  }
  std::sort(phase.begin(), phase.end());
  Protocol p = std::move(pb).build();
  p.suggested_phase = phase;
  return {std::move(p), b.rule, b.model, phase};
}

// English clock: at each level every active agent is asked "above theta?".
BuiltinProtocol protocol_ascending_sp(const json& params) {
  Builtin b = rule_auction("second_price", params, std::nullopt);
  const TypeSpace& s = b.rule.space();
  auto levels = types_by_value_ascending(s);
  ProtocolBuilder pb(s);
  const int n = s.agents();
  std::function<void(int, std::size_t, std::vector<int>, std::size_t, std::vector<int>)> rec =
      [&](int v, std::size_t level, std::vector<int> active, std::size_t pos, std::vector<int> staying) {
        if (level + 1 >= levels.size()) return;
        if (pos == active.size()) {
          if (staying.size() <= 1) return;
          rec(v, level + 1, staying, 0, {});
          return;
        }
        std::vector<int> above;
        for (int t = 0; t < s.size(0); ++t)
          if (s.value(0, t) > s.value(0, levels[level])) above.push_back(t);
        int i = active[pos];
        for (auto [cell, child] : pb.split(v, Query::elicit_in(s, i, above))) {
          auto st = staying;
          if (cell == 0) st.push_back(i);
          rec(child, level, active, pos + 1, st);
        }
      };
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  rec(pb.root(), 0, all, 0, {});
  return {std::move(pb).build(), b.rule, b.model, std::nullopt};
}

}  // namespace

BuiltinProtocol builtin_protocol(const std::string& name, const json& params) {
  if (name == "serial_dictatorship") return protocol_serial_dictatorship(params);
  if (name == "descending_first_price") return protocol_descending(params);
  if (name == "count_ascending_kplus1_price") return protocol_count_ascending(params);
  if (name == "double_auction_count") return protocol_double_auction(params);
  if (name == "multicount_stable_matching") return protocol_multicount();
  if (name == "ascending_elicitation_sp") return protocol_ascending_sp(params);
  throw InputError("unknown builtin protocol '" + name + "'");
}

std::vector<std::string> builtin_protocol_names() {
  return {"serial_dictatorship",    "descending_first_price",    "count_ascending_kplus1_price",
          "double_auction_count",   "multicount_stable_matching", "ascending_elicitation_sp"};
}

}  // namespace cpv
