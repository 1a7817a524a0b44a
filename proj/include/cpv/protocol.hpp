#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpv/core.hpp"

namespace cpv {

enum class QueryKind { Elicit, Count, MultiCount, Extensional };

struct Query {
  QueryKind kind = QueryKind::Extensional;
  int agent = -1;                            // Elicit
  std::vector<std::vector<int>> subsets;     // Count: one subset, MultiCount: l subsets
  std::vector<std::vector<int>> cells;       // Elicit: type cells, Count: count cells
  std::vector<std::vector<std::vector<int>>> vector_cells;  // MultiCount: count vectors
  std::vector<ProfileSet> children;          // Extensional

  static Query elicit(int agent, std::vector<std::vector<int>> cells);
  // Binary "is theta_i in S?" query. Cell 0 is S, cell 1 the rest.
  static Query elicit_in(const TypeSpace& space, int agent, const std::vector<int>& yes);
  static Query count(std::vector<int> subset, std::vector<std::vector<int>> cells);
  static Query multicount(std::vector<std::vector<int>> subsets,
                          std::vector<std::vector<std::vector<int>>> cells);
  static Query extensional(std::vector<ProfileSet> children);

  std::size_t cell_count() const;
  // Cell containing the profile, -1 if none.
  int cell_of(const TypeSpace& space, std::size_t index) const;
  // Throws InputError when cells do not partition the index domain.
  void check(const TypeSpace& space) const;

  std::string describe(const TypeSpace& space) const;
  std::string describe_cell(const TypeSpace& space, int cell) const;
};

struct Node {
  int parent = -1;
  int parent_cell = -1;
  ProfileSet label;
  std::optional<Query> query;
  std::vector<int> children;
  std::vector<int> child_cells;
};

class Protocol {
 public:
  Protocol() = default;
  Protocol(TypeSpace space, std::vector<Node> nodes, std::vector<std::string> notes = {});

  const TypeSpace& space() const { return space_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int root() const { return 0; }
  const Node& node(int v) const { return nodes_.at(v); }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool is_leaf(int v) const { return nodes_.at(v).children.empty(); }
  std::vector<int> leaves() const;
  // u is a proper ancestor of w
  bool precedes(int u, int w) const;
  std::vector<int> path_to(int v) const;  // root .. v
  int depth(int v) const;
  std::vector<int> subtree(int v) const;  // preorder

  // Leaf node reached by each profile, -1 outside every leaf label.
  const std::vector<int>& leaf_map() const { return leaf_of_; }
  int leaf_of(std::size_t index) const { return leaf_of_.at(index); }

  // Construction notes: pruned empty cells and contracted queries.
  const std::vector<std::string>& notes() const { return notes_; }

  std::optional<std::vector<int>> suggested_phase;

 private:
  TypeSpace space_;
  std::vector<Node> nodes_;
  std::vector<std::string> notes_;
  std::vector<int> leaf_of_;
};

class ProtocolBuilder {
 public:
  explicit ProtocolBuilder(TypeSpace space);
  int root() const { return 0; }
  const ProfileSet& label(int v) const { return nodes_.at(v).label; }
  const TypeSpace& space() const { return space_; }

  // Attaches the query to leaf v and returns (cell, child) for each nonempty
  // cell. Empty cells are dropped; if only one cell is nonempty the query is
  // dropped and {(cell, v)} is returned. Extensional children are kept
  // verbatim so that validate_protocol can report defects in them.
  std::vector<std::pair<int, int>> split(int v, const Query& q);

  Protocol build() &&;

 private:
  TypeSpace space_;
  std::vector<Node> nodes_;
  std::vector<std::string> notes_;
};

struct ValidationReport {
  bool ok = true;
  std::string kind;    // "overlap", "non-exhaustive", ...
  int node = -1;
  std::vector<int> path;
  std::string message;
  std::vector<std::string> notes;
};

ValidationReport validate_protocol(const Protocol& p);

enum class QueryClass { Leaf, Elicit, Count, MultiCount, ExtensionalOnly };

struct Classification {
  QueryClass cls = QueryClass::Leaf;
  int agent = -1;
  int arity = 0;  // number of subsets for Count / MultiCount
  std::vector<std::vector<int>> subsets;
  bool cap_reached = false;
};

Classification classify_query(const Protocol& p, int node, std::size_t budget = 200000);
std::string class_name(const Classification& c);

struct Step {
  int node;
  std::string query;
  int cell;
  std::string answer;
  int child;
};

struct Transcript {
  std::vector<Step> steps;
  int leaf = -1;
  std::optional<int> outcome;
};

class NotImplemented : public PreconditionError {
 public:
  NotImplemented(int leaf, std::size_t a, std::size_t b)
      : PreconditionError("protocol does not implement rule at leaf " + std::to_string(leaf)),
        leaf(leaf), first(a), second(b) {}
  int leaf;
  std::size_t first, second;
};

class NotSeparated : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Transcript run_protocol(const Protocol& p, std::size_t profile, const ChoiceRule* rule = nullptr);

struct ImplementsResult {
  bool holds = true;
  int leaf = -1;
  std::size_t first = 0, second = 0;
};

ImplementsResult implements(const Protocol& p, const ChoiceRule& rule);
// Throws NotImplemented when the protocol does not implement the rule.
void require_implements(const Protocol& p, const ChoiceRule& rule);

int earliest_departure(const Protocol& p, std::size_t a, std::size_t b);

}  // namespace cpv
