#include "corpus.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "cpv/search.hpp"

using namespace cpv;

namespace {

void check_found(const SearchResult& r, const ChoiceRule& rule) {
  REQUIRE(r.status == SearchStatus::Found);
  REQUIRE(r.protocol);
  CHECK(validate_protocol(*r.protocol).ok);
  CHECK(implements(*r.protocol, rule).holds);
  CHECK(oracle::protocol_cp(*r.protocol, rule));
}

}  // namespace

TEST_CASE("family parsing") {
  auto f = parse_family("elicit,count");
  CHECK(f.elicit);
  CHECK(f.count);
  CHECK_FALSE(f.coarse_counts);
  f = parse_family("count:any");
  CHECK_FALSE(f.elicit);
  CHECK(f.coarse_counts);
  CHECK(parse_family("multicount:2").multicount == 2);
  CHECK_THROWS_AS(parse_family("bogus"), InputError);
  CHECK(status_name(SearchStatus::Nonexistent) == "proven-nonexistent");
}

TEST_CASE("elicitation search on small rules") {
  auto fair = fx::fair();
  CHECK(exhaustive_cp_search(fair, parse_family("elicit")).status == SearchStatus::Nonexistent);
  auto sd = builtin_rule("serial_dictatorship").rule;
  check_found(exhaustive_cp_search(sd, parse_family("elicit")), sd);
  auto fp = builtin_rule("first_price", {{"n", 2}, {"m", 3}}).rule;
  check_found(exhaustive_cp_search(fp, parse_family("elicit")), fp);
}

TEST_CASE("four-profile school instance") {
  auto r = builtin_rule("school_four_profiles").rule;
  CHECK(exhaustive_cp_search(r, parse_family("elicit")).status == SearchStatus::Nonexistent);
  auto exact = exhaustive_cp_search(r, parse_family("elicit,count"));
  CHECK(exact.status == SearchStatus::Nonexistent);
  // coarse count cells isolate one profile whose neighbours have other outcomes
  auto coarse = exhaustive_cp_search(r, parse_family("elicit,count:any"));
  check_found(coarse, r);
  CHECK(coarse.protocol->node(0).query->kind == QueryKind::Count);
}

TEST_CASE("obstruction scan") {
  auto r = builtin_rule("school_four_profiles").rule;
  auto rep = obstruction_scan(r, r.space().support(), parse_family("elicit,count"));
  CHECK(rep.holds);
  CHECK_FALSE(rep.vacuous);
  int elicit = 0, count = 0;
  for (const auto& e : rep.entries) {
    CHECK_FALSE(e.safe);
    REQUIRE(e.violated);
    int i = -1;
    CHECK(oracle::unilateral(r.space(), e.violated->first, e.violated->second, &i));
    CHECK(i == e.agent);
    CHECK(r.outcome(e.violated->first) == r.outcome(e.violated->second));
    (e.query.kind == QueryKind::Elicit ? elicit : count)++;
  }
  CHECK(elicit == 2);
  CHECK(count == 4);

  auto sd = builtin_rule("serial_dictatorship").rule;
  CHECK_FALSE(obstruction_scan(sd, sd.space().support(), parse_family("elicit")).holds);

  auto s = TypeSpace::uniform(2, {"A", "B"});
  auto c = fx::constant_rule(s);
  auto vac = obstruction_scan(c, s.support(), parse_family("elicit"));
  CHECK(vac.vacuous);
  CHECK_FALSE(vac.holds);
}

TEST_CASE("budget exhaustion is reported") {
  auto r = builtin_rule("serial_dictatorship", {{"n", 3}, {"objects", {"A", "B", "C"}}}).rule;
  SearchBudget b;
  b.max_states = 3;
  auto res = exhaustive_cp_search(r, parse_family("elicit"), b);
  CHECK(res.status == SearchStatus::BudgetExhausted);
  CHECK_FALSE(res.reason.empty());
}

TEST_CASE("osp search") {
  auto nc = builtin_rule("non_clinching");
  CHECK(exhaustive_osp_search(nc.rule, nc.model).status == SearchStatus::Nonexistent);
  auto sd = builtin_rule("serial_dictatorship");
  auto res = exhaustive_osp_search(sd.rule, sd.model);
  REQUIRE(res.status == SearchStatus::Found);
  CHECK(check_protocol_osp(*res.protocol, sd.rule, sd.model).holds);
  CHECK(implements(*res.protocol, sd.rule).holds);
}

TEST_CASE("random corpus: search agrees with the oracle with and without memo") {
  SearchBudget memo, plain;
  plain.memo = false;
  for (auto& item : corpus::make(100, 23)) {
    const auto& r = item.rule;
    bool expect = oracle::cp_implementable(r);
    auto a = exhaustive_cp_search(r, parse_family("elicit"), memo);
    auto b = exhaustive_cp_search(r, parse_family("elicit"), plain);
    CHECK((a.status == SearchStatus::Found) == expect);
    CHECK(a.status == b.status);
    if (a.status == SearchStatus::Found) check_found(a, r);
    // adding count queries can only help
    if (!r.space().common_alphabet()) continue;
    auto c = exhaustive_cp_search(r, parse_family("elicit,count"), memo);
    if (expect) CHECK(c.status == SearchStatus::Found);
    if (c.status == SearchStatus::Found) check_found(c, r);
  }
}
