#include "corpus.hpp"
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "cpv/tatonnement.hpp"

using namespace cpv;

namespace {

// Outcomes reachable below v, from the leaves directly.
std::set<int> reach(const Protocol& p, const ChoiceRule& r, int v) {
  std::set<int> out;
  p.node(v).label.for_each([&](std::size_t k) { out.insert(r.outcome(k)); });
  return out;
}

// End-set disjointness plus privacy inside each end subtree.
bool tatonnement_oracle(const Protocol& p, const ChoiceRule& r, const std::vector<int>& phase) {
  std::set<int> in(phase.begin(), phase.end());
  std::vector<int> end;
  for (int v : phase) {
    bool inner = false;
    for (int c : p.node(v).children) inner = inner || in.count(c);
    if (!inner) end.push_back(v);
  }
  for (std::size_t a = 0; a < end.size(); ++a)
    for (std::size_t b = a + 1; b < end.size(); ++b) {
      auto x = reach(p, r, end[a]), y = reach(p, r, end[b]);
      for (int o : x)
        if (y.count(o)) return false;
    }
  const TypeSpace& s = r.space();
  for (int v : end) {
    auto m = p.node(v).label.members();
    for (auto a : m)
      for (auto b : m) {
        int i = -1;
        if (a < b && oracle::unilateral(s, a, b, &i) && r.outcome(a) == r.outcome(b) && p.leaf_of(a) != p.leaf_of(b))
          return false;
      }
  }
  return true;
}

}  // namespace

TEST_CASE("phase validation") {
  auto r = fx::fair();
  auto p = fx::two_query(r.space());
  auto rep = validate_phase(p, {0});
  CHECK(rep.ok);
  CHECK(rep.initial);
  CHECK(rep.end == std::vector<int>{0});
  std::vector<int> all(p.size());
  for (int v = 0; v < p.size(); ++v) all[v] = v;
  rep = validate_phase(p, all);
  CHECK(rep.ok);
  CHECK(rep.end.size() == 4);
  int child = p.node(0).children[0];
  int grandchild = p.node(child).children[0];
  rep = validate_phase(p, {0, grandchild});
  CHECK_FALSE(rep.ok);
  CHECK(rep.node == child);
  rep = validate_phase(p, {child});
  CHECK(rep.ok);
  CHECK_FALSE(rep.initial);
  CHECK_THROWS_AS(validate_phase(p, {0, 0}), InputError);
  CHECK_THROWS_AS(validate_phase(p, {99}), InputError);
}

TEST_CASE("outcome sets per node") {
  auto r = fx::fair();
  auto p = fx::two_query(r.space());
  auto x = outcome_reach(p, r);
  CHECK(x[0].count() == 2);
  for (int v : p.leaves()) CHECK(x[v].count() == 1);
}

TEST_CASE("count-based auctions are tatonnement") {
  for (int k = 1; k <= 2; ++k) {
    auto bp = builtin_protocol("count_ascending_kplus1_price", {{"k", k}, {"n", k + 2}, {"m", 3}});
    REQUIRE(bp.phase);
    auto v = check_tatonnement(bp.protocol, bp.rule, *bp.phase);
    CHECK(v.holds);
    CHECK(v.disjoint);
    CHECK(tatonnement_oracle(bp.protocol, bp.rule, *bp.phase));
    auto found = phase_discovery(bp.protocol, bp.rule);
    REQUIRE(found);
    CHECK(check_tatonnement(bp.protocol, bp.rule, *found).holds);
  }
  auto da = builtin_protocol("double_auction_count", {{"m", 2}});
  REQUIRE(da.phase);
  CHECK(check_tatonnement(da.protocol, da.rule, *da.phase).holds);
  CHECK(tatonnement_oracle(da.protocol, da.rule, *da.phase));
}

TEST_CASE("serial dictatorship with the root phase") {
  auto bp = builtin_protocol("serial_dictatorship");
  auto v = check_tatonnement(bp.protocol, bp.rule, {0});
  CHECK(v.holds);
  CHECK(v.end == std::vector<int>{0});
}

TEST_CASE("discovery") {
  auto r = fx::fair();
  CHECK_FALSE(phase_discovery(fx::two_query(r.space()), r));
  auto s = TypeSpace::uniform(2, {"A", "B"});
  auto c = fx::constant_rule(s);
  auto found = phase_discovery(fx::root_only(s), c);
  REQUIRE(found);
  CHECK(*found == std::vector<int>{0});
}

TEST_CASE("two-query protocol fails with overlapping end sets") {
  auto r = fx::fair();
  auto p = fx::two_query(r.space());
  auto v = check_tatonnement(p, r, {0, p.node(0).children[0], p.node(0).children[1]});
  CHECK_FALSE(v.holds);
  CHECK_FALSE(v.disjoint);
  CHECK(v.overlap_a >= 0);
  auto w = check_tatonnement(p, r, {0});
  CHECK_FALSE(w.holds);
  CHECK(w.failing_subtree == 0);
  REQUIRE(w.violation);
}

TEST_CASE("random corpus: verdicts agree with the oracle on every initial phase") {
  for (auto& item : corpus::make(80, 11)) {
    if (!item.tree) continue;
    const auto& p = *item.tree;
    // phases: the root, then the root plus its children
    std::vector<std::vector<int>> phases{{0}};
    if (!p.is_leaf(0)) {
      std::vector<int> ph{0};
      for (int c : p.node(0).children) ph.push_back(c);
      phases.push_back(ph);
    }
    for (auto& ph : phases) {
      REQUIRE(validate_phase(p, ph).ok);
      CHECK(check_tatonnement(p, item.rule, ph).holds == tatonnement_oracle(p, item.rule, ph));
    }
  }
}
