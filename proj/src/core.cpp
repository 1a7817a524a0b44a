#include "cpv/core.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace cpv {

namespace {

Rational type_value(const std::string& label, int position) {
  if (auto r = Rational::parse(label)) return *r;
  std::size_t end = label.size(), begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(label[begin - 1]))) --begin;
  if (begin < end && end - begin <= 15) return Rational(std::stoll(label.substr(begin)));
  return Rational(position);
}

}  // namespace

TypeSpace::TypeSpace(std::vector<std::vector<std::string>> alphabets, std::size_t cap)
    : alphabets_(std::move(alphabets)) {
  if (alphabets_.empty()) throw InputError("type space needs at least one agent");
  count_ = 1;
  for (std::size_t i = 0; i < alphabets_.size(); ++i) {
    const auto& a = alphabets_[i];
    if (a.empty()) throw InputError("agent " + std::to_string(i + 1) + " has an empty alphabet");
    std::set<std::string> seen(a.begin(), a.end());
    if (seen.size() != a.size())
      throw InputError("agent " + std::to_string(i + 1) + " has duplicate type labels");
    if (count_ > cap / a.size())
      throw ResourceError("profile count exceeds cap of " + std::to_string(cap));
    count_ *= a.size();
  }
  strides_.assign(alphabets_.size(), 1);
  for (int i = static_cast<int>(alphabets_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * alphabets_[i + 1].size();
  common_ = std::all_of(alphabets_.begin(), alphabets_.end(),
                        [&](const auto& a) { return a == alphabets_.front(); });
  values_.resize(alphabets_.size());
  for (std::size_t i = 0; i < alphabets_.size(); ++i)
    for (std::size_t t = 0; t < alphabets_[i].size(); ++t)
      values_[i].push_back(type_value(alphabets_[i][t], static_cast<int>(t)));
  support_ = ProfileSet(count_, true);
}

TypeSpace TypeSpace::uniform(int agents, const std::vector<std::string>& alphabet,
                             std::size_t cap) {
  if (agents < 1) throw InputError("type space needs at least one agent");
  return TypeSpace(std::vector<std::vector<std::string>>(agents, alphabet), cap);
}

TypeSpace TypeSpace::numeric(int agents, int m) {
  std::vector<std::string> alpha;
  for (int t = 1; t <= m; ++t) alpha.push_back(std::to_string(t));
  return uniform(agents, alpha);
}

std::optional<int> TypeSpace::find(int agent, std::string_view label) const {
  const auto& a = alphabets_[agent];
  for (std::size_t t = 0; t < a.size(); ++t)
    if (a[t] == label) return static_cast<int>(t);
  return std::nullopt;
}

std::size_t TypeSpace::index(const Profile& profile) const {
  if (profile.size() != alphabets_.size())
    throw InputError("profile has " + std::to_string(profile.size()) + " entries, expected " +
                     std::to_string(alphabets_.size()));
  std::size_t k = 0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] < 0 || profile[i] >= static_cast<int>(alphabets_[i].size()))
      throw InputError("type index " + std::to_string(profile[i]) + " out of range for agent " +
                       std::to_string(i + 1));
    k += static_cast<std::size_t>(profile[i]) * strides_[i];
  }
  return k;
}

Profile TypeSpace::profile(std::size_t index) const {
  if (index >= count_) throw InputError("profile index out of range");
  Profile p(alphabets_.size());
  for (std::size_t i = 0; i < alphabets_.size(); ++i) p[i] = coord(index, static_cast<int>(i));
  return p;
}

Profile TypeSpace::parse_profile(const std::vector<std::string>& labels) const {
  if (labels.size() != alphabets_.size())
    throw InputError("profile has " + std::to_string(labels.size()) + " entries, expected " +
                     std::to_string(alphabets_.size()));
  Profile p;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto t = find(static_cast<int>(i), labels[i]);
    if (!t) throw InputError("unknown type '" + labels[i] + "' for agent " + std::to_string(i + 1));
    p.push_back(*t);
  }
  return p;
}

std::string TypeSpace::profile_label(std::size_t index) const {
  std::string s = "(";
  for (int i = 0; i < agents(); ++i) {
    if (i) s += ",";
    s += label(i, coord(index, i));
  }
  return s + ")";
}

ProfileSet TypeSpace::product_set(const Factors& factors) const {
  if (static_cast<int>(factors.size()) != agents())
    throw InputError("factor count does not match agent count");
  ProfileSet out(count_);
  Profile p(agents());
  std::vector<std::size_t> pos(agents(), 0);
  for (const auto& f : factors)
    if (f.empty()) return out;
  while (true) {
    std::size_t k = 0;
    for (int i = 0; i < agents(); ++i) k += static_cast<std::size_t>(factors[i][pos[i]]) * strides_[i];
    out.set(k);
    int i = agents() - 1;
    while (i >= 0 && ++pos[i] == factors[i].size()) pos[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

TypeSpace TypeSpace::restricted(const ProfileSet& support) const {
  if (support.universe() != count_) throw InputError("support does not match space");
  ProfileSet s = support & support_;
  if (s.none()) throw InputError("restriction leaves an empty space");
  TypeSpace out = *this;
  out.support_ = std::move(s);
  return out;
}

std::vector<int> projection(const TypeSpace& space, const ProfileSet& set, int agent) {
  std::vector<char> seen(space.size(agent), 0);
  set.for_each([&](std::size_t k) { seen[space.coord(k, agent)] = 1; });
  std::vector<int> out;
  for (int t = 0; t < space.size(agent); ++t)
    if (seen[t]) out.push_back(t);
  return out;
}

std::optional<Factors> product_factorization(const TypeSpace& space, const ProfileSet& set) {
  if (set.none()) throw InputError("product factorization of an empty set");
  Factors f;
  std::size_t prod = 1;
  for (int i = 0; i < space.agents(); ++i) {
    f.push_back(projection(space, set, i));
    prod *= f.back().size();
  }
  if (prod != set.count()) return std::nullopt;
  return f;
}

ChoiceRule::ChoiceRule(TypeSpace space, std::vector<std::string> outcomes, std::vector<int> table)
    : space_(std::move(space)), outcomes_(std::move(outcomes)), table_(std::move(table)) {
  if (table_.size() != space_.profile_count())
    throw InputError("rule table has " + std::to_string(table_.size()) + " entries, expected " +
                     std::to_string(space_.profile_count()));
  std::unordered_set<std::string> seen(outcomes_.begin(), outcomes_.end());
  if (seen.size() != outcomes_.size()) throw InputError("repeated outcome label");
  for (std::size_t k = 0; k < table_.size(); ++k) {
    if (!space_.in_support(k)) {
      table_[k] = -1;
      continue;
    }
    if (table_[k] < 0 || table_[k] >= static_cast<int>(outcomes_.size()))
      throw InputError("rule undefined or out of range at profile " + space_.profile_label(k));
  }
}

ChoiceRule ChoiceRule::tabulate(const TypeSpace& space,
                                const std::function<OutcomeSpec(const Profile&)>& fn) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, int> ids;
  std::vector<int> table(space.profile_count(), -1);
  std::vector<std::optional<Allocation>> allocs;
  std::vector<std::vector<std::string>> comp_labels;
  std::vector<std::unordered_map<std::string, int>> comp_ids;
  std::vector<std::vector<int>> per_profile;
  bool with_components = false, first = true;
  space.support().for_each([&](std::size_t k) {
    OutcomeSpec spec = fn(space.profile(k));
    if (first) {
      with_components = !spec.components.empty();
      if (with_components) {
        if (static_cast<int>(spec.components.size()) != space.agents())
          throw InputError("component count does not match agent count");
        comp_labels.resize(space.agents());
        comp_ids.resize(space.agents());
        per_profile.assign(space.agents(), std::vector<int>(space.profile_count(), -1));
      }
      first = false;
    }
    auto [it, fresh] = ids.emplace(spec.label, static_cast<int>(labels.size()));
    if (fresh) {
      labels.push_back(spec.label);
      allocs.push_back(spec.allocation);
    }
    table[k] = it->second;
    if (with_components) {
      if (static_cast<int>(spec.components.size()) != space.agents())
        throw InputError("component count does not match agent count");
      for (int i = 0; i < space.agents(); ++i) {
        auto [ci, cfresh] =
            comp_ids[i].emplace(spec.components[i], static_cast<int>(comp_labels[i].size()));
        if (cfresh) comp_labels[i].push_back(spec.components[i]);
        per_profile[i][k] = ci->second;
      }
    }
  });
  ChoiceRule rule(space, std::move(labels), std::move(table));
  if (with_components) rule.set_components(std::move(comp_labels), per_profile);
  if (!allocs.empty() && std::all_of(allocs.begin(), allocs.end(),
                                     [](const auto& a) { return a.has_value(); })) {
    std::vector<Allocation> a;
    for (auto& x : allocs) a.push_back(*x);
    rule.set_allocations(std::move(a));
  }
  return rule;
}

void ChoiceRule::set_components(std::vector<std::vector<std::string>> comp_labels,
                                const std::vector<std::vector<int>>& per_profile) {
  const int n = space_.agents();
  if (static_cast<int>(comp_labels.size()) != n || static_cast<int>(per_profile.size()) != n)
    throw InputError("components must be given for every agent");
  std::vector<std::vector<int>> of(n, std::vector<int>(outcomes_.size(), -1));
  for (int i = 0; i < n; ++i) {
    if (per_profile[i].size() != table_.size())
      throw InputError("component table size mismatch for agent " + std::to_string(i + 1));
    for (std::size_t k = 0; k < table_.size(); ++k) {
      if (table_[k] < 0) continue;
      int c = per_profile[i][k];
      if (c < 0 || c >= static_cast<int>(comp_labels[i].size()))
        throw InputError("component missing or out of range for agent " + std::to_string(i + 1) +
                         " at profile " + space_.profile_label(k));
      int& slot = of[i][table_[k]];
      if (slot >= 0 && slot != c)
        throw InputError("outcome '" + outcomes_[table_[k]] + "' has two different components for agent " +
                         std::to_string(i + 1));
      slot = c;
    }
  }
  comp_labels_ = std::move(comp_labels);
  component_of_ = std::move(of);
}

void ChoiceRule::set_allocations(std::vector<Allocation> allocs) {
  if (allocs.size() != outcomes_.size()) throw InputError("one allocation per outcome required");
  for (const auto& a : allocs)
    if (static_cast<int>(a.shares.size()) != space_.agents())
      throw InputError("allocation needs one share per agent");
  allocations_ = std::move(allocs);
}

OutcomeSet ChoiceRule::outcomes_on(const ProfileSet& set) const {
  OutcomeSet out(outcomes_.size());
  set.for_each([&](std::size_t k) {
    if (table_[k] >= 0) out.set(table_[k]);
  });
  return out;
}

std::optional<int> ChoiceRule::constant_on(const ProfileSet& set) const {
  int x = -1;
  bool ok = true;
  std::size_t k = set.first();
  for (; k < set.universe() && ok; k = set.next(k + 1)) {
    int y = table_[k];
    if (x < 0)
      x = y;
    else if (y != x)
      ok = false;
  }
  if (!ok || x < 0) return std::nullopt;
  return x;
}

ChoiceRule ChoiceRule::restricted(const ProfileSet& support) const {
  return restricted(space_.restricted(support));
}

ChoiceRule ChoiceRule::restricted(const TypeSpace& narrower) const {
  if (!narrower.same_product(space_) || !narrower.support().subset_of(space_.support()))
    throw InputError("restriction is not a subspace of the rule's space");
  ChoiceRule out = *this;
  out.space_ = narrower;
  for (std::size_t k = 0; k < out.table_.size(); ++k)
    if (!narrower.in_support(k)) out.table_[k] = -1;
  return out;
}

RestrictedView restrict_rule(const ChoiceRule& rule, const ProfileSet& set) {
  auto f = product_factorization(rule.space(), set);
  if (!f) throw InputError("restriction set is not a product set");
  RestrictedView v{*f, set, rule.constant_on(set)};
  return v;
}

std::string format_factors(const TypeSpace& space, const Factors& factors) {
  std::string s;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) s += " x ";
    s += "{";
    for (std::size_t j = 0; j < factors[i].size(); ++j) {
      if (j) s += ",";
      s += space.label(static_cast<int>(i), factors[i][j]);
    }
    s += "}";
  }
  return s;
}

}  // namespace cpv
