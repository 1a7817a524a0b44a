#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpv/core.hpp"
#include "cpv/protocol.hpp"
#include "json.hpp"

namespace cpv {

enum class DomainKind { None, Auction, Assignment, House, School, DoubleAuction, Ordinal };

std::string domain_name(DomainKind k);
DomainKind parse_domain(const std::string& s);

struct DomainModel {
  DomainKind kind = DomainKind::None;
  std::vector<std::string> objects;
  // [agent][type] -> object indices, best first. Listed objects beat "nothing".
  std::vector<std::vector<std::vector<int>>> preferences;
  // house: object per agent; double auction: 1 for sellers, 0 for buyers
  std::vector<int> endowment;
  std::vector<int> capacity;                                 // per object
  std::vector<std::vector<std::vector<Rational>>> scores;    // [agent][type][object]
  std::vector<std::vector<std::vector<int>>> outcome_ranking;  // [agent][type] -> outcome ids, best first
  std::vector<std::vector<Rational>> values;                 // [agent][type]; empty: type values
  int units = 1;                                             // auction supply

  Rational value(const TypeSpace& space, int agent, int type) const;
  int rank(int agent, int type, int object) const;  // position in preference list, -1 if unlisted
};

// Agent i's utility at outcome x when of type t. Throws InputError when the
// model lacks the data to compare outcomes.
Rational outcome_utility(const DomainModel& m, const ChoiceRule& rule, int agent, int type, int x);

struct Builtin {
  ChoiceRule rule;
  DomainModel model;
};

// Built-in rules. When space is given the rule is tabulated on it, otherwise
// the default space for the params is used.
Builtin builtin_rule(const std::string& name, const nlohmann::json& params = nlohmann::json::object(),
                     const std::optional<TypeSpace>& space = std::nullopt);
std::vector<std::string> builtin_rule_names();

// Families of rules: every completion of the pointwise-constrained cells.
std::vector<Builtin> builtin_family(const std::string& name, const nlohmann::json& params = nlohmann::json::object());
std::vector<std::string> builtin_family_names();

enum class Property { Efficient, IndividuallyRational, Stable, Strategyproof };

std::string property_name(Property p);
Property parse_property(const std::string& s);

// Rules over the outcome universe (labels + allocations) that satisfy the
// pointwise properties at every support profile. Throws ResourceError above cap.
std::vector<ChoiceRule> constrained_family(const TypeSpace& space, const DomainModel& model,
                                           const std::vector<std::pair<std::string, Allocation>>& universe,
                                           const std::vector<Property>& props, std::size_t cap = 4096);

struct PropertyVerdict {
  bool holds = true;
  std::size_t profile = 0;
  std::optional<std::size_t> other;  // deviation profile or dominating profile
  int agent = -1;
  int object = -1;                   // blocking object for stability
  std::optional<Allocation> better;  // dominating allocation for efficiency
  std::string message;
};

PropertyVerdict check_rule_property(const ChoiceRule& rule, const DomainModel& model, Property p);

struct OspVerdict {
  bool holds = true;
  int node = -1;
  int agent = -1;
  int type = -1;       // true type
  int truthful = -1;   // child taken by the true type
  int deviation = -1;  // child whose best beats the truthful worst
};

// Throws InputError when a query is not an individual elicitation.
OspVerdict check_protocol_osp(const Protocol& p, const ChoiceRule& rule, const DomainModel& model);

struct BuiltinProtocol {
  Protocol protocol;
  ChoiceRule rule;
  DomainModel model;
  std::optional<std::vector<int>> phase;
};

BuiltinProtocol builtin_protocol(const std::string& name, const nlohmann::json& params = nlohmann::json::object());
std::vector<std::string> builtin_protocol_names();

// Support profiles whose k-th and (k+1)-st highest values differ.
TypeSpace restrict_distinct_order_stats(const TypeSpace& space, int k);

// Type values sorted descending; stat(v, k) is the k-th highest (1-based).
Rational order_stat(const TypeSpace& space, const Profile& p, int k);

}  // namespace cpv
