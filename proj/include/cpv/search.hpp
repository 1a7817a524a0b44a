#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpv/mechanisms.hpp"
#include "cpv/protocol.hpp"

namespace cpv {

struct QueryFamily {
  bool elicit = true;
  bool count = false;
  int multicount = 0;  // largest arity, 0 = off
  int max_cells = 0;   // 0 = no bound beyond n+1 for counts
  // false: a count answer is the exact count (vector); true: any partition of counts.
  bool coarse_counts = false;
};

QueryFamily parse_family(const std::string& list);

struct SearchBudget {
  std::size_t max_states = 200000;
  int max_depth = 64;
  double max_seconds = 30.0;
  bool memo = true;
};

enum class SearchStatus { Found, Nonexistent, BudgetExhausted };
std::string status_name(SearchStatus s);

struct SearchResult {
  SearchStatus status = SearchStatus::Nonexistent;
  std::optional<Protocol> protocol;
  std::size_t states = 0;
  double seconds = 0.0;
  std::string reason;
};

SearchResult exhaustive_cp_search(const ChoiceRule& rule, const QueryFamily& family, const SearchBudget& budget = {});
SearchResult exhaustive_osp_search(const ChoiceRule& rule, const DomainModel& model, const SearchBudget& budget = {});

struct ObstructionEntry {
  Query query;
  std::vector<std::vector<std::size_t>> partition;  // blocks of profile indices in S
  bool safe = false;
  std::optional<std::pair<std::size_t, std::size_t>> violated;
  int agent = -1;  // agent whose type differs in the violated pair
};

struct ObstructionReport {
  bool holds = false;
  bool vacuous = false;  // phi constant on S
  std::vector<ObstructionEntry> entries;
};

ObstructionReport obstruction_scan(const ChoiceRule& rule, const ProfileSet& set, const QueryFamily& family);

}  // namespace cpv
