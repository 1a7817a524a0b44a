#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpv/core.hpp"
#include "cpv/protocol.hpp"

namespace cpv {

struct InseparabilityPartition {
  int agent = -1;
  Factors base;
  std::vector<std::vector<int>> classes;  // ordered by smallest member
  std::vector<int> class_of;              // type -> class, -1 outside base[agent]
};

// Throws InputError when the set is not a product.
InseparabilityPartition inseparability_classes(const ChoiceRule& rule, const ProfileSet& set, int agent);
InseparabilityPartition inseparability_classes(const ChoiceRule& rule, const Factors& factors, int agent);

// Unilateral pair (agent changes type_a -> type_b) separated by the protocol.
struct Violation {
  int agent = -1;
  int type_a = -1, type_b = -1;
  std::size_t profile_a = 0, profile_b = 0;
  int leaf_a = -1, leaf_b = -1;
  int outcome = -1;  // shared outcome (or component for the individual notion)
};

struct CpVerdict {
  bool holds = true;
  std::optional<Violation> violation;      // first in (agent, profile, type) order
  std::vector<Violation> per_agent;        // first violation of each violating agent
};

// scope limits the scan to pairs with both profiles inside it.
// Throws NotImplemented if p does not implement rule.
CpVerdict check_protocol_cp(const Protocol& p, const ChoiceRule& rule, const ProfileSet* scope = nullptr);
// Throws InputError when the rule has no components.
CpVerdict check_protocol_icp(const Protocol& p, const ChoiceRule& rule);

struct GcpVerdict {
  bool holds = true;
  std::optional<std::pair<std::size_t, std::size_t>> pair;  // distinct leaves, equal outcome
  int node = -1;                                             // children reach a common outcome
};

GcpVerdict check_protocol_gcp(const Protocol& p, const ChoiceRule& rule);

struct CornersViolation {
  int agent_i = -1, agent_j = -1;
  std::size_t corners[4] = {0, 0, 0, 0};  // (a,c) (a,d) (b,c) (b,d) for types a<b of i, c<d of j
  int odd = -1;                            // corner whose outcome differs
  int outcome = -1;                        // outcome of the other three
};

std::optional<CornersViolation> corners_scan(const ChoiceRule& rule);

struct Synthesis {
  std::optional<Protocol> protocol;
  std::optional<Witness> witness;
  std::optional<Witness> minimal;
};

// Requires the rule's support to be a product set (InputError otherwise).
Synthesis synthesize_or_witness(const ChoiceRule& rule, bool minimize = true);

// Throws InputError on malformed factors or factors leaving the support.
bool witness_verify(const ChoiceRule& rule, const Witness& w);
Witness minimize_witness(const ChoiceRule& rule, const Witness& w);

struct OracleOptions {
  double cap = 1 << 20;  // max number of product sets enumerated
  bool sampling = false;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

// Throws ResourceError when enumeration exceeds the cap and sampling is off.
std::optional<Witness> witness_oracle(const ChoiceRule& rule, const OracleOptions& opts = {});

struct NonbossyVerdict {
  bool holds = true;
  int agent = -1;
  int type_a = -1, type_b = -1;
  std::size_t profile_a = 0, profile_b = 0;
  int other = -1;  // first agent whose component changes, -1 if none does
};

NonbossyVerdict check_nonbossy(const ChoiceRule& rule);

}  // namespace cpv
