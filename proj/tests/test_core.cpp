#include "doctest.h"
#include "fixtures.hpp"

using namespace cpv;

TEST_CASE("rational arithmetic and parsing") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(-3, 4) * Rational(4) == Rational(-3));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational::parse("7") == Rational(7));
  CHECK(Rational::parse("-3/4") == Rational(-3, 4));
  CHECK(Rational::parse("2.25") == Rational(9, 4));
  CHECK_FALSE(Rational::parse("x").has_value());
  CHECK(Rational(6, -4).str() == "-3/2");
}

TEST_CASE("bitset operations") {
  Bitset a(130), b(130);
  a.set(3);
  a.set(129);
  b.set(129);
  CHECK(a.count() == 2);
  CHECK(b.subset_of(a));
  CHECK((a & b).count() == 1);
  CHECK((a - b).first() == 3);
  CHECK(a.next(3) == 3);
  CHECK(a.next(4) == 129);
  CHECK(a.intersects(b));
  CHECK(a.members() == std::vector<std::size_t>{3, 129});
}

TEST_CASE("profile index is mixed radix with agent one most significant") {
  auto s2 = TypeSpace::numeric(2, 2);
  CHECK(s2.index({0, 0}) == 0);
  CHECK(s2.profile(0) == Profile{0, 0});
  CHECK(s2.index({1, 0}) == 2);
  auto s3 = TypeSpace::numeric(3, 9);
  CHECK(s3.index({5, 8, 6}) == 483);
  for (std::size_t k = 0; k < s3.profile_count(); k += 37) CHECK(s3.index(s3.profile(k)) == k);
  CHECK(s3.with_coord(483, 1, 0) == 5 * 81 + 6);
}

TEST_CASE("type values") {
  TypeSpace s({{"θ5", "θ0"}, {"3/2", "lo"}});
  CHECK(s.value(0, 0) == Rational(5));
  CHECK(s.value(1, 0) == Rational(3, 2));
  CHECK(s.value(1, 1) == Rational(1));
}

TEST_CASE("type space rejects bad input") {
  CHECK_THROWS_AS(TypeSpace(std::vector<std::vector<std::string>>{{"A"}, {}}), InputError);
  CHECK_THROWS_AS(TypeSpace(std::vector<std::vector<std::string>>{{"A", "A"}}), InputError);
  CHECK_THROWS_AS(TypeSpace::numeric(30, 2), ResourceError);
  auto s = TypeSpace::uniform(2, {"A", "B"});
  CHECK_THROWS_AS(s.parse_profile({"A", "C"}), InputError);
  CHECK_THROWS_AS(s.parse_profile({"A"}), InputError);
}

TEST_CASE("product factorization") {
  auto s = TypeSpace::uniform(2, {"A", "B"});
  auto full = product_factorization(s, s.support());
  REQUIRE(full);
  CHECK(*full == Factors{{0, 1}, {0, 1}});
  ProfileSet diag = s.empty_set();
  diag.set(fx::idx(s, {"A", "A"}));
  diag.set(fx::idx(s, {"B", "B"}));
  CHECK_FALSE(product_factorization(s, diag));
  ProfileSet row = s.empty_set();
  row.set(fx::idx(s, {"A", "A"}));
  row.set(fx::idx(s, {"A", "B"}));
  CHECK(*product_factorization(s, row) == Factors{{0}, {0, 1}});
  CHECK_THROWS_AS(product_factorization(s, s.empty_set()), InputError);
}

TEST_CASE("restriction of the tie-break rule") {
  auto r = fx::fair();
  const auto& s = r.space();
  CHECK_FALSE(restrict_rule(r, s.support()).is_constant());
  ProfileSet row = s.empty_set();
  row.set(fx::idx(s, {"A", "A"}));
  row.set(fx::idx(s, {"A", "B"}));
  auto v = restrict_rule(r, row);
  REQUIRE(v.is_constant());
  CHECK(r.outcome_label(*v.constant) == "x");
  ProfileSet one = s.empty_set();
  one.set(3);
  CHECK(restrict_rule(r, one).is_constant());
}

TEST_CASE("choice rule validation") {
  auto s = TypeSpace::uniform(2, {"A", "B"});
  CHECK_THROWS_AS(ChoiceRule(s, {"x"}, {0, 0, 0}), InputError);
  CHECK_THROWS_AS(ChoiceRule(s, {"x"}, {0, 0, 0, 1}), InputError);
  CHECK_THROWS_AS(ChoiceRule(s, {"x", "x"}, {0, 0, 0, 1}), InputError);
  auto r = ChoiceRule(s, {"x", "y"}, {0, 0, 0, 1});
  // components must be a function of the outcome
  CHECK_THROWS_AS(r.set_components({{"a", "b"}, {"a"}}, {{0, 1, 0, 0}, {0, 0, 0, 0}}), InputError);
}

TEST_CASE("restricted spaces keep indices and mark the rest") {
  auto s = TypeSpace::uniform(2, {"1", "2", "3"});
  auto r = s.restricted_to([](const Profile& p) { return p[0] != p[1]; });
  CHECK(r.support().count() == 6);
  CHECK_FALSE(r.full_support());
  auto rule = ChoiceRule::tabulate(r, [](const Profile& p) {
    OutcomeSpec o;
    o.label = p[0] > p[1] ? "1" : "2";
    return o;
  });
  CHECK(rule.outcome(r.index({0, 0})) == -1);
  CHECK(rule.outcome_count() == 2);
}
