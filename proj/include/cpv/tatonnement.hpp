#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpv/core.hpp"
#include "cpv/privacy.hpp"
#include "cpv/protocol.hpp"

namespace cpv {

struct PhaseReport {
  bool ok = true;
  std::string defect;
  int node = -1;        // node missing from the phase when convexity fails
  bool initial = false;
  std::vector<int> end;  // nodes of the phase with no child in the phase
};

// Throws InputError on unknown or repeated node ids.
PhaseReport validate_phase(const Protocol& p, const std::vector<int>& nodes);

// X_v for every node.
std::vector<OutcomeSet> outcome_reach(const Protocol& p, const ChoiceRule& rule);

struct TatonnementVerdict {
  bool holds = true;
  std::vector<int> end;
  bool disjoint = true;
  int overlap_a = -1, overlap_b = -1;  // end nodes with intersecting outcome sets
  int failing_subtree = -1;
  std::optional<Violation> violation;  // inside the failing subtree
};

// The phase must be valid, initial, and cover the tree: every phase node
// outside end(V') has all its children in the phase. InputError otherwise.
TatonnementVerdict check_tatonnement(const Protocol& p, const ChoiceRule& rule, const std::vector<int>& phase);

// Initial phase grown breadth-first while end-set outcome sets stay disjoint.
// When the protocol contains count or multi-count queries only those nodes
// are expanded. nullopt when the root is a query whose children overlap.
std::optional<std::vector<int>> phase_discovery(const Protocol& p, const ChoiceRule& rule);

}  // namespace cpv
