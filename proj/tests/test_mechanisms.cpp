#include "doctest.h"
#include "fixtures.hpp"
#include "cpv/tatonnement.hpp"

using namespace cpv;

namespace {

std::string outcome_at(const ChoiceRule& r, const std::vector<std::string>& labels) {
  return r.outcome_label(r.outcome(fx::idx(r.space(), labels)));
}

// Full elicitation asking the agents in the given order.
Protocol elicit_in_order(const TypeSpace& s, const std::vector<int>& order) {
  ProtocolBuilder b(s);
  std::vector<int> frontier{b.root()};
  for (int i : order) {
    std::vector<int> next;
    for (int v : frontier) {
      std::vector<std::vector<int>> cells;
      for (int t = 0; t < s.size(i); ++t) cells.push_back({t});
      for (auto [cell, child] : b.split(v, Query::elicit(i, cells))) next.push_back(child);
    }
    frontier = next;
  }
  return std::move(b).build();
}

}  // namespace

TEST_CASE("auction rules") {
  auto fp = builtin_rule("first_price", {{"n", 2}, {"m", 3}}).rule;
  CHECK(outcome_at(fp, {"2", "2"}) == "w1@2");
  CHECK(outcome_at(fp, {"1", "3"}) == "w2@3");
  auto sp = builtin_rule("second_price", {{"n", 3}, {"m", 3}}).rule;
  CHECK(sp.space().profile_count() == 27);
  CHECK(outcome_at(sp, {"1", "2", "3"}) == "w3@2");
  CHECK(outcome_at(sp, {"3", "3", "1"}) == "w1@3");
  auto kp = builtin_rule("kth_price", {{"n", 4}, {"m", 4}, {"k", 3}}).rule;
  CHECK(outcome_at(kp, {"4", "1", "3", "2"}) == "{1,3}@2");
  auto rp = builtin_rule("rank_payment", {{"n", 3}, {"m", 3}, {"k", 3}}).rule;
  CHECK(outcome_at(rp, {"2", "3", "1"}) == "w2@1");
  CHECK_THROWS_AS(builtin_rule("kth_price", {{"n", 2}, {"k", 3}}), InputError);
  CHECK_THROWS_AS(builtin_rule("no_such_rule"), InputError);
}

TEST_CASE("walrasian double auction prices") {
  auto lo = builtin_rule("double_auction_walrasian", {{"m", 2}, {"types", 2}, {"price", "lower"}, {"price_only", true}}).rule;
  auto hi = builtin_rule("double_auction_walrasian", {{"m", 2}, {"types", 2}, {"price", "upper"}, {"price_only", true}}).rule;
  CHECK(outcome_at(lo, {"2", "1", "2", "1"}) == "t=1");
  CHECK(outcome_at(hi, {"2", "1", "2", "1"}) == "t=2");
  CHECK(outcome_at(lo, {"2", "2", "2", "1"}) == "t=2");
  CHECK_THROWS_AS(builtin_rule("double_auction_walrasian", {{"m", 2}, {"price", "mid"}}), InputError);
}

TEST_CASE("non-clinching rule") {
  auto b = builtin_rule("non_clinching");
  const auto& r = b.rule;
  CHECK(outcome_at(r, {"lo", "lo"}) == "x1");
  CHECK(outcome_at(r, {"lo", "hi"}) == "x2");
  CHECK(outcome_at(r, {"hi", "lo"}) == "x3");
  CHECK(outcome_at(r, {"hi", "hi"}) == "x4");
  CHECK(check_rule_property(r, b.model, Property::Strategyproof).holds);
  for (auto order : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
    auto p = elicit_in_order(r.space(), order);
    REQUIRE(implements(p, r).holds);
    auto v = check_protocol_osp(p, r, b.model);
    CHECK_FALSE(v.holds);
    CHECK(v.node == 0);
    CHECK(v.agent == order[0]);
  }
}

TEST_CASE("strategyproofness of auctions") {
  auto sp = builtin_rule("second_price", {{"n", 3}, {"m", 3}});
  CHECK(check_rule_property(sp.rule, sp.model, Property::Strategyproof).holds);
  auto fp = builtin_rule("first_price", {{"n", 2}, {"m", 3}});
  auto v = check_rule_property(fp.rule, fp.model, Property::Strategyproof);
  CHECK_FALSE(v.holds);
  REQUIRE(v.other);
}

TEST_CASE("serial dictatorship") {
  auto b = builtin_rule("serial_dictatorship", {{"n", 3}, {"objects", {"A", "B", "C"}}});
  CHECK(b.rule.space().profile_count() == 216);
  CHECK(check_rule_property(b.rule, b.model, Property::Efficient).holds);
  CHECK(check_rule_property(b.rule, b.model, Property::Strategyproof).holds);
  auto bp = builtin_protocol("serial_dictatorship");
  CHECK(implements(bp.protocol, bp.rule).holds);
  CHECK(check_protocol_osp(bp.protocol, bp.rule, bp.model).holds);
}

TEST_CASE("keeping endowments is individually rational but not efficient") {
  auto b = builtin_rule("keep_endowments");
  CHECK(b.rule.outcome_count() == 1);
  CHECK(check_rule_property(b.rule, b.model, Property::IndividuallyRational).holds);
  auto v = check_rule_property(b.rule, b.model, Property::Efficient);
  CHECK_FALSE(v.holds);
  CHECK(b.rule.space().profile_label(v.profile) == "(other,other,own)");
  REQUIRE(v.better);
  CHECK(v.better->shares[0].item == 1);
  CHECK(v.better->shares[1].item == 0);
}

TEST_CASE("school rules") {
  auto da = builtin_rule("school_da");
  CHECK(check_rule_property(da.rule, da.model, Property::Stable).holds);
  CHECK(outcome_at(da.rule, {"s1", "s2"}) == "1:a 2:b");
  CHECK(outcome_at(da.rule, {"s1'", "s2'"}) == "1:b 2:a");
  auto fam = builtin_family("school_stable");
  CHECK(fam.size() == 1);
  auto ms = builtin_rule("multicount_stable");
  CHECK(check_rule_property(ms.rule, ms.model, Property::Stable).holds);
}

TEST_CASE("families") {
  CHECK(builtin_family("efficient_2x2").size() == 4);
  for (auto& b : builtin_family("efficient_2x2"))
    CHECK(check_rule_property(b.rule, b.model, Property::Efficient).holds);
  for (int n = 2; n <= 4; ++n) {
    auto fam = builtin_family("house_ir_efficient", {{"n", n}});
    REQUIRE(fam.size() == 1);
    CHECK(check_rule_property(fam[0].rule, fam[0].model, Property::Efficient).holds);
    CHECK(check_rule_property(fam[0].rule, fam[0].model, Property::IndividuallyRational).holds);
  }
}

TEST_CASE("count ascending auction traces") {
  auto bp = builtin_protocol("count_ascending_kplus1_price", {{"k", 1}, {"n", 3}, {"m", 3}});
  CHECK(validate_protocol(bp.protocol).ok);
  CHECK(implements(bp.protocol, bp.rule).holds);
  const auto& s = bp.protocol.space();
  auto t = run_protocol(bp.protocol, fx::idx(s, {"1", "3", "2"}), &bp.rule);
  REQUIRE(t.outcome);
  CHECK(bp.rule.outcome_label(*t.outcome) == "w2@2");
  CHECK_FALSE(t.steps.empty());
  CHECK(t.steps[0].query.find("count") != std::string::npos);
  for (int v = 0; v < bp.protocol.size(); ++v)
    if (!bp.protocol.is_leaf(v)) {
      auto c = classify_query(bp.protocol, v);
      CHECK((c.cls == QueryClass::Count || c.cls == QueryClass::Elicit));
    }
}

TEST_CASE("multi-count matching protocol") {
  auto bp = builtin_protocol("multicount_stable_matching");
  CHECK(validate_protocol(bp.protocol).ok);
  CHECK(implements(bp.protocol, bp.rule).holds);
  CHECK(bp.protocol.node(0).query->kind == QueryKind::MultiCount);
  REQUIRE(bp.phase);
  CHECK(check_tatonnement(bp.protocol, bp.rule, *bp.phase).holds);
  CHECK(check_protocol_cp(bp.protocol, bp.rule).holds);
}

TEST_CASE("osp checks need elicitation queries") {
  auto bp = builtin_protocol("count_ascending_kplus1_price", {{"k", 1}, {"n", 3}, {"m", 3}});
  CHECK_THROWS_AS(check_protocol_osp(bp.protocol, bp.rule, bp.model), InputError);
}
