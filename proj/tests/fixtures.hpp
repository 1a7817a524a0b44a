#pragma once

#include <string>
#include <vector>

#include "cpv/mechanisms.hpp"
#include "cpv/protocol.hpp"

namespace fx {

using namespace cpv;

inline ChoiceRule fair() { return builtin_rule("fair_tiebreak_2x2").rule; }

inline ChoiceRule table_rule(const TypeSpace& s, const std::vector<std::string>& labels, const std::vector<int>& table) {
  return ChoiceRule(s, labels, table);
}

inline ChoiceRule constant_rule(const TypeSpace& s) {
  std::vector<int> t(s.profile_count(), -1);
  s.support().for_each([&](std::size_t k) { t[k] = 0; });
  return ChoiceRule(s, {"c"}, t);
}

// Agent 1 "is A?", then agent 2 "is A?" on both branches.
inline Protocol two_query(const TypeSpace& s) {
  ProtocolBuilder b(s);
  auto kids = b.split(b.root(), Query::elicit_in(s, 0, {0}));
  for (auto [cell, child] : kids) b.split(child, Query::elicit_in(s, 1, {0}));
  return std::move(b).build();
}

// Agent 1 "is A?" only.
inline Protocol one_query(const TypeSpace& s) {
  ProtocolBuilder b(s);
  b.split(b.root(), Query::elicit_in(s, 0, {0}));
  return std::move(b).build();
}

inline Protocol root_only(const TypeSpace& s) { return ProtocolBuilder(s).build(); }

// Sequence of binary elicitation splits reaching singletons.
inline Protocol full_elicitation(const TypeSpace& s) {
  ProtocolBuilder b(s);
  std::vector<int> frontier{b.root()};
  for (int i = 0; i < s.agents(); ++i) {
    std::vector<int> next;
    for (int v : frontier) {
      std::vector<std::vector<int>> cells;
      for (int t = 0; t < s.size(i); ++t) cells.push_back({t});
      if (cells.size() < 2) {
        next.push_back(v);
        continue;
      }
      for (auto [cell, child] : b.split(v, Query::elicit(i, cells))) next.push_back(child);
    }
    frontier = next;
  }
  return std::move(b).build();
}

inline std::size_t idx(const TypeSpace& s, const std::vector<std::string>& labels) {
  return s.index(s.parse_profile(labels));
}

}  // namespace fx
