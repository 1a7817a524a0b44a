#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpv/bitset.hpp"
#include "cpv/errors.hpp"
#include "cpv/rational.hpp"

namespace cpv {

using Profile = std::vector<int>;
// Per-agent sorted lists of type indices describing a product set.
using Factors = std::vector<std::vector<int>>;

inline constexpr std::size_t kDefaultProfileCap = std::size_t{1} << 20;

class TypeSpace {
 public:
  TypeSpace() = default;
  explicit TypeSpace(std::vector<std::vector<std::string>> alphabets,
                     std::size_t cap = kDefaultProfileCap);
  static TypeSpace uniform(int agents, const std::vector<std::string>& alphabet,
                           std::size_t cap = kDefaultProfileCap);
  // Types "1".."m" for every agent.
  static TypeSpace numeric(int agents, int m);

  int agents() const { return static_cast<int>(alphabets_.size()); }
  int size(int agent) const { return static_cast<int>(alphabets_[agent].size()); }
  const std::vector<std::string>& alphabet(int agent) const { return alphabets_[agent]; }
  const std::vector<std::vector<std::string>>& alphabets() const { return alphabets_; }
  const std::string& label(int agent, int type) const { return alphabets_[agent][type]; }
  std::optional<int> find(int agent, std::string_view label) const;
  bool common_alphabet() const { return common_; }

  // Number of points in the full product, including profiles outside the support.
  std::size_t profile_count() const { return count_; }
  std::size_t stride(int agent) const { return strides_[agent]; }
  int coord(std::size_t index, int agent) const {
    return static_cast<int>((index / strides_[agent]) % alphabets_[agent].size());
  }
  std::size_t with_coord(std::size_t index, int agent, int type) const {
    return index - static_cast<std::size_t>(coord(index, agent)) * strides_[agent] +
           static_cast<std::size_t>(type) * strides_[agent];
  }

  std::size_t index(const Profile& profile) const;
  Profile profile(std::size_t index) const;
  Profile parse_profile(const std::vector<std::string>& labels) const;
  std::string profile_label(std::size_t index) const;

  // Profiles the space actually ranges over. Equal to the full product unless
  // the space was restricted.
  const ProfileSet& support() const { return support_; }
  bool in_support(std::size_t index) const { return support_.test(index); }
  bool full_support() const { return support_.count() == count_; }
  ProfileSet empty_set() const { return ProfileSet(count_); }
  ProfileSet product_set(const Factors& factors) const;

  TypeSpace restricted(const ProfileSet& support) const;
  template <class Pred>
  TypeSpace restricted_to(Pred pred) const {
    ProfileSet keep(count_);
    support_.for_each([&](std::size_t k) {
      if (pred(profile(k))) keep.set(k);
    });
    return restricted(keep);
  }

  // Numeric reading of a type: the label as a rational, else a trailing
  // integer ("θ5" -> 5), else the position in the alphabet.
  Rational value(int agent, int type) const { return values_[agent][type]; }

  bool same_product(const TypeSpace& o) const { return alphabets_ == o.alphabets_; }
  bool operator==(const TypeSpace& o) const {
    return alphabets_ == o.alphabets_ && support_ == o.support_;
  }

 private:
  std::vector<std::vector<std::string>> alphabets_;
  std::vector<std::vector<Rational>> values_;
  std::vector<std::size_t> strides_;
  std::size_t count_ = 0;
  bool common_ = false;
  ProfileSet support_;
};

// Distinct types agent i takes inside the set, ascending.
std::vector<int> projection(const TypeSpace& space, const ProfileSet& set, int agent);

// Factors (S_i) with set = x_i S_i, or nullopt. Throws InputError on an empty set.
std::optional<Factors> product_factorization(const TypeSpace& space, const ProfileSet& set);

struct Share {
  int item = -1;  // -1: nothing
  Rational pay;
  bool operator==(const Share&) const = default;
};

struct Allocation {
  std::vector<Share> shares;  // one per agent
  std::string tag;
  bool operator==(const Allocation&) const = default;
};

struct OutcomeSpec {
  std::string label;
  std::vector<std::string> components;  // empty, or one label per agent
  std::optional<Allocation> allocation;
};

class ChoiceRule {
 public:
  ChoiceRule() = default;
  // table[k] is the outcome id of profile k, -1 outside the support.
  ChoiceRule(TypeSpace space, std::vector<std::string> outcomes, std::vector<int> table);

  // Builds the table by evaluating fn on every support profile. Outcome and
  // component ids are assigned in order of first appearance.
  static ChoiceRule tabulate(const TypeSpace& space,
                             const std::function<OutcomeSpec(const Profile&)>& fn);

  const TypeSpace& space() const { return space_; }
  int outcome_count() const { return static_cast<int>(outcomes_.size()); }
  const std::string& outcome_label(int x) const { return outcomes_[x]; }
  const std::vector<std::string>& outcome_labels() const { return outcomes_; }
  int outcome(std::size_t index) const { return table_[index]; }
  int outcome(const Profile& p) const { return table_[space_.index(p)]; }
  const std::vector<int>& table() const { return table_; }

  // Per-agent components. comp_labels[i][c] names component c of agent i and
  // per_profile[i][k] gives agent i's component at profile k.
  void set_components(std::vector<std::vector<std::string>> comp_labels,
                      const std::vector<std::vector<int>>& per_profile);
  bool has_components() const { return !component_of_.empty(); }
  int component(int agent, std::size_t index) const {
    return component_of_[agent][table_[index]];
  }
  int component_of_outcome(int agent, int x) const { return component_of_[agent][x]; }
  const std::string& component_label(int agent, int c) const { return comp_labels_[agent][c]; }

  void set_allocations(std::vector<Allocation> allocs);
  bool has_allocations() const { return !allocations_.empty(); }
  const Allocation& allocation(int x) const { return allocations_[x]; }

  OutcomeSet outcomes_on(const ProfileSet& set) const;
  // The common outcome when the rule is constant on a nonempty set.
  std::optional<int> constant_on(const ProfileSet& set) const;

  // Same rule with the support cut down; outcome ids are kept.
  ChoiceRule restricted(const ProfileSet& support) const;
  ChoiceRule restricted(const TypeSpace& narrower) const;

 private:
  TypeSpace space_;
  std::vector<std::string> outcomes_;
  std::vector<int> table_;
  std::vector<std::vector<std::string>> comp_labels_;
  std::vector<std::vector<int>> component_of_;  // [agent][outcome]
  std::vector<Allocation> allocations_;
};

struct RestrictedView {
  Factors factors;
  ProfileSet set;
  std::optional<int> constant;  // outcome id when constant
  bool is_constant() const { return constant.has_value(); }
};

// Throws InputError when the set is empty or not a product.
RestrictedView restrict_rule(const ChoiceRule& rule, const ProfileSet& set);

struct Witness {
  Factors factors;
};

std::string format_factors(const TypeSpace& space, const Factors& factors);

}  // namespace cpv
