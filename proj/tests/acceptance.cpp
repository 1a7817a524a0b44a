// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "corpus.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "cpv/privacy.hpp"
#include "cpv/search.hpp"
#include "cpv/tatonnement.hpp"

using namespace cpv;

namespace {

struct Fail {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw Fail{why};
}

bool cp_synth(const ChoiceRule& r) { return synthesize_or_witness(r, false).protocol.has_value(); }

// Allocations agree at every support profile.
bool same_allocations(const ChoiceRule& a, const ChoiceRule& b) {
  bool same = true;
  a.space().support().for_each([&](std::size_t k) {
    const auto& x = a.allocation(a.outcome(k));
    const auto& y = b.allocation(b.outcome(k));
    for (std::size_t i = 0; i < x.shares.size(); ++i) same = same && x.shares[i].item == y.shares[i].item;
  });
  return same;
}

void c1() {
  auto r = fx::fair();
  expect(synthesize_or_witness(r).witness.has_value(), "no witness");
  expect(exhaustive_cp_search(r, parse_family("elicit")).status == SearchStatus::Nonexistent, "search status");
  auto v = check_protocol_cp(fx::two_query(r.space()), r);
  expect(!v.holds, "two-query protocol passes");
  bool agent2 = false;
  for (const auto& x : v.per_agent) agent2 = agent2 || x.agent == 1;
  expect(agent2, "no violation for agent 2");
}

void c2() {
  auto fam = builtin_family("efficient_2x2");
  expect(fam.size() == 4, "family size " + std::to_string(fam.size()));
  auto fair = fx::fair();
  auto sd12 = builtin_rule("serial_dictatorship", {{"order", {1, 2}}}, fair.space()).rule;
  auto sd21 = builtin_rule("serial_dictatorship", {{"order", {2, 1}}}, fair.space()).rule;
  int good = 0;
  for (const auto& b : fam) {
    bool is_sd = same_allocations(b.rule, sd12) || same_allocations(b.rule, sd21);
    bool no_corners = !corners_scan(b.rule);
    auto syn = synthesize_or_witness(b.rule);
    expect(no_corners == is_sd, "corners verdict");
    expect(syn.protocol.has_value() == is_sd, "synthesis verdict");
    if (syn.protocol) expect(check_protocol_cp(*syn.protocol, b.rule).holds, "synthesized protocol not private");
    if (!is_sd) expect(syn.witness && witness_verify(b.rule, *syn.witness), "bad witness");
    good += is_sd;
  }
  expect(good == 2, "dictatorships found: " + std::to_string(good));
}

void c3() {
  for (int n = 1; n <= 3; ++n)
    for (int m = 2; m <= 3; ++m) {
      std::vector<std::string> objects{"A", "B", "C"};
      objects.resize(m);
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 1);
      do {
        nlohmann::json params{{"n", n}, {"objects", objects}, {"order", order}};
        auto bp = builtin_protocol("serial_dictatorship", params);
        std::string tag = params.dump();
        expect(implements(bp.protocol, bp.rule).holds, "implements " + tag);
        expect(check_protocol_cp(bp.protocol, bp.rule).holds, "cp " + tag);
        expect(check_protocol_gcp(bp.protocol, bp.rule).holds, "gcp " + tag);
        expect(check_protocol_icp(bp.protocol, bp.rule).holds, "icp " + tag);
        expect(check_rule_property(bp.rule, bp.model, Property::Efficient).holds, "efficient " + tag);
        expect(check_rule_property(bp.rule, bp.model, Property::Strategyproof).holds, "sp " + tag);
        expect(check_nonbossy(bp.rule).holds, "nonbossy " + tag);
      } while (std::next_permutation(order.begin(), order.end()));
    }
}

void c4() {
  for (int n = 2; n <= 3; ++n)
    for (int m = 2; m <= 5; ++m) {
      auto bp = builtin_protocol("descending_first_price", {{"n", n}, {"m", m}});
      auto fp = builtin_rule("first_price", {{"n", n}, {"m", m}}).rule;
      std::string tag = std::to_string(n) + "x" + std::to_string(m);
      expect(bp.rule.table() == fp.table(), "rule mismatch " + tag);
      expect(implements(bp.protocol, fp).holds, "implements " + tag);
      expect(check_protocol_cp(bp.protocol, fp).holds, "cp " + tag);
      expect(check_protocol_icp(bp.protocol, fp).holds, "icp " + tag);
    }
}

void c5() {
  auto sp = builtin_rule("second_price", {{"n", 3}, {"m", 3}}).rule;
  expect(corners_scan(sp).has_value(), "no corners violation");
  expect(synthesize_or_witness(sp).witness.has_value(), "no witness");
  std::vector<std::string> nine;
  for (int j = 0; j <= 8; ++j) nine.push_back("θ" + std::to_string(j));
  auto full = builtin_rule("second_price", {}, TypeSpace::uniform(3, nine)).rule;
  Witness w{{{5, 0, 2}, {8, 7, 3}, {6, 4, 1}}};
  expect(witness_verify(full, w), "product set rejected");
  // the tensor is recomputed from the rule, and matches the standalone builtin
  auto small = builtin_rule("second_price_nine_types").rule;
  std::set<std::string> labels;
  small.space().support().for_each([&](std::size_t k) {
    Profile p = small.space().profile(k);
    Profile q{w.factors[0][p[0]], w.factors[1][p[1]], w.factors[2][p[2]]};
    expect(full.outcome_label(full.outcome(full.space().index(q))) == small.outcome_label(small.outcome(k)),
           "tensor mismatch");
    labels.insert(small.outcome_label(small.outcome(k)));
  });
  expect(labels.size() > 1, "constant tensor");
  auto syn = synthesize_or_witness(small);
  expect(syn.witness && syn.witness->factors == Factors{{0, 1, 2}, {0, 1, 2}, {0, 1, 2}}, "restricted witness");
}

void c6() {
  for (int k = 2; k <= 3; ++k) {
    auto r = builtin_rule("kth_price", {{"n", k + 2}, {"m", 4}, {"k", k}}).rule;
    auto syn = synthesize_or_witness(r);
    expect(syn.witness.has_value(), "no witness for k=" + std::to_string(k));
    expect(witness_verify(r, *syn.witness), "bad witness for k=" + std::to_string(k));
  }
}

void c7() {
  for (int n = 2; n <= 4; ++n) {
    auto fam = builtin_family("house_ir_efficient", {{"n", n}});
    expect(!fam.empty(), "empty family");
    for (const auto& b : fam) {
      expect(corners_scan(b.rule).has_value(), "completion without corners violation, n=" + std::to_string(n));
      expect(oracle::corners_violation(b.rule), "oracle disagrees");
    }
  }
}

void c8() {
  auto fam = builtin_family("school_stable");
  expect(!fam.empty(), "empty family");
  for (const auto& b : fam) {
    expect(check_rule_property(b.rule, b.model, Property::Stable).holds, "unstable completion");
    expect(corners_scan(b.rule).has_value(), "completion without corners violation");
    expect(oracle::corners_violation(b.rule), "oracle disagrees");
  }
}

void c9() {
  for (std::string price : {"lower", "upper"})
    for (bool price_only : {true, false}) {
      auto r = builtin_rule("double_auction_walrasian", {{"m", 2}, {"types", 2}, {"price", price}, {"price_only", price_only}}).rule;
      auto v = corners_scan(r);
      expect(v.has_value(), "no corners violation for " + price);
      expect(oracle::corners_violation(r), "oracle disagrees for " + price);
      expect(!oracle::cp_implementable(r), "oracle finds a protocol for " + price);
    }
}

void check_count_protocol(const BuiltinProtocol& bp, const std::string& tag) {
  expect(bp.phase.has_value(), "no phase " + tag);
  expect(implements(bp.protocol, bp.rule).holds, "implements " + tag);
  expect(check_tatonnement(bp.protocol, bp.rule, *bp.phase).holds, "tatonnement " + tag);
  expect(check_protocol_cp(bp.protocol, bp.rule).holds, "cp " + tag);
  auto found = phase_discovery(bp.protocol, bp.rule);
  expect(found.has_value(), "no phase discovered " + tag);
  expect(*found == *bp.phase, "discovered phase differs " + tag);
}

void c10() {
  for (auto [k, n] : std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}}) {
    auto bp = builtin_protocol("count_ascending_kplus1_price", {{"k", k}, {"n", n}, {"m", 3}});
    check_count_protocol(bp, "k=" + std::to_string(k) + " n=" + std::to_string(n));
  }
  check_count_protocol(builtin_protocol("double_auction_count", {{"m", 2}}), "double auction");
}

using Blocks = std::set<std::set<std::string>>;

void c11() {
  auto r = builtin_rule("school_four_profiles").rule;
  const auto& s = r.space();
  auto rep = obstruction_scan(r, s.support(), parse_family("elicit,count"));
  expect(rep.holds, "obstruction does not hold");
  // profiles 1..4: (s1,s2) (s1',s2) (s1,s2') (s1',s2')
  std::map<std::string, std::string> name{{"(s1,s2)", "1"}, {"(s1',s2)", "2"}, {"(s1,s2')", "3"}, {"(s1',s2')", "4"}};
  std::set<Blocks> elicit, count;
  for (const auto& e : rep.entries) {
    expect(!e.safe && e.violated.has_value(), "separating query without violation");
    int i = -1;
    expect(oracle::unilateral(s, e.violated->first, e.violated->second, &i) && i == e.agent, "bad pair");
    expect(r.outcome(e.violated->first) == r.outcome(e.violated->second), "pair outcomes differ");
    Blocks b;
    for (const auto& blk : e.partition) {
      std::set<std::string> names;
      for (auto k : blk) names.insert(name.at(s.profile_label(k)));
      b.insert(names);
    }
    (e.query.kind == QueryKind::Elicit ? elicit : count).insert(b);
  }
  std::set<Blocks> want_elicit{{{"1", "3"}, {"2", "4"}}, {{"1", "2"}, {"3", "4"}}};
  std::set<Blocks> want_count{{{"1", "2"}, {"3", "4"}},
                              {{"1", "3"}, {"2", "4"}},
                              {{"1"}, {"2", "3"}, {"4"}},
                              {{"3"}, {"1", "4"}, {"2"}}};
  expect(elicit == want_elicit, "elicitation cases differ");
  expect(count == want_count, "count cases differ");
  expect(exhaustive_cp_search(r, parse_family("elicit,count")).status == SearchStatus::Nonexistent,
         "search finds a protocol");
}

void c12() {
  auto bp = builtin_protocol("multicount_stable_matching");
  expect(implements(bp.protocol, bp.rule).holds, "implements");
  expect(bp.phase.has_value(), "no phase");
  expect(check_tatonnement(bp.protocol, bp.rule, *bp.phase).holds, "tatonnement");
  expect(check_protocol_cp(bp.protocol, bp.rule).holds, "cp");
  expect(check_rule_property(bp.rule, bp.model, Property::Stable).holds, "stable");
}

void c13() {
  auto b = builtin_rule("non_clinching");
  expect(check_rule_property(b.rule, b.model, Property::Strategyproof).holds, "not strategyproof");
  expect(check_protocol_gcp(fx::full_elicitation(b.rule.space()), b.rule).holds, "gcp");
  auto syn = synthesize_or_witness(b.rule);
  expect(syn.protocol && check_protocol_gcp(*syn.protocol, b.rule).holds, "synthesized gcp");
  expect(exhaustive_osp_search(b.rule, b.model).status == SearchStatus::Nonexistent, "osp protocol found");
}

std::string c14() {
  auto items = corpus::make(600, 20240601);
  int found = 0;
  for (const auto& item : items) {
    const auto& r = item.rule;
    bool syn = cp_synth(r);
    bool orc = !witness_oracle(r).has_value();
    auto search = exhaustive_cp_search(r, parse_family("elicit"));
    expect(search.status != SearchStatus::BudgetExhausted, "budget exhausted");
    bool srch = search.status == SearchStatus::Found;
    expect(syn == orc && orc == srch, "discrepancy on a random rule");
    found += syn;
  }
  return std::to_string(items.size()) + " rules, " + std::to_string(found) + " private";
}

struct Case {
  ChoiceRule rule;
  Protocol protocol;
  std::vector<std::vector<int>> phases;
};

std::string c15() {
  std::vector<Case> cases;
  auto add = [&](const ChoiceRule& r, const Protocol& p, std::optional<std::vector<int>> phase) {
    Case c{r, p, {{0}}};
    if (phase) c.phases.push_back(*phase);
    if (auto d = phase_discovery(p, r)) c.phases.push_back(*d);
    if (!p.is_leaf(0)) {
      std::vector<int> ph{0};
      for (int w : p.node(0).children) ph.push_back(w);
      c.phases.push_back(ph);
    }
    cases.push_back(std::move(c));
  };
  for (const auto& name : builtin_protocol_names()) {
    auto bp = builtin_protocol(name);
    add(bp.rule, bp.protocol, bp.phase);
  }
  for (const auto& name : builtin_rule_names()) {
    auto r = builtin_rule(name).rule;
    try {
      if (auto syn = synthesize_or_witness(r, false); syn.protocol) add(r, *syn.protocol, std::nullopt);
    } catch (const InputError&) {
      // non-product support
    }
    if (r.space().support().count() <= 64) add(r, fx::full_elicitation(r.space()), std::nullopt);
  }
  for (const auto& item : corpus::make(300, 77)) {
    if (item.tree) add(item.rule, *item.tree, std::nullopt);
    add(item.rule, fx::full_elicitation(item.rule.space()), std::nullopt);
  }
  int checked = 0, private_count = 0, icp_count = 0, tat_count = 0;
  for (const auto& c : cases) {
    bool cp = check_protocol_cp(c.protocol, c.rule).holds;
    private_count += cp;
    expect(cp == oracle::protocol_cp(c.protocol, c.rule), "cp disagrees with oracle");
    if (check_protocol_gcp(c.protocol, c.rule).holds) expect(cp, "gcp without cp");
    if (c.rule.has_components()) {
      bool icp = check_protocol_icp(c.protocol, c.rule).holds;
      icp_count += icp;
      if (icp) expect(cp, "icp without cp");
      if (cp && check_nonbossy(c.rule).holds) expect(icp, "cp and nonbossy without icp");
    }
    for (const auto& ph : c.phases)
      if (validate_phase(c.protocol, ph).ok && check_tatonnement(c.protocol, c.rule, ph).holds) {
        ++tat_count;
        expect(cp, "tatonnement without cp");
      }
    ++checked;
  }
  return std::to_string(checked) + " protocols, " + std::to_string(private_count) + " CP, " +
         std::to_string(icp_count) + " ICP, " + std::to_string(tat_count) + " tatonnement phases";
}

void c16() {
  std::vector<int> both;
  for (int k = 1; k <= 3; ++k) {
    auto b = builtin_rule("rank_payment", {{"n", 3}, {"m", 3}, {"k", k}});
    bool eff = check_rule_property(b.rule, b.model, Property::Efficient).holds;
    bool cp = cp_synth(b.rule);
    expect(cp == (exhaustive_cp_search(b.rule, parse_family("elicit")).status == SearchStatus::Found),
           "search disagrees for k=" + std::to_string(k));
    if (eff && cp) both.push_back(k);
  }
  expect(both == std::vector<int>{1}, "efficient and private set differs");
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<std::string()>>> criteria;
  auto plain = [](void (*f)()) {
    return std::function<std::string()>([f] {
      f();
      return std::string();
    });
  };
  criteria = {
      {"tie-break rule: witness, no elicitation protocol, agent-2 violation", plain(c1)},
      {"efficient 2x2 completions: exactly the two dictatorships are private", plain(c2)},
      {"serial dictatorships: implementation, CP/GCP/ICP, efficient, SP, nonbossy", plain(c3)},
      {"descending protocol implements first price with CP and ICP", plain(c4)},
      {"second price: corners violation, witness, nine-type product set", plain(c5)},
      {"k-th price for n = k+2: witness", plain(c6)},
      {"house assignment IR+efficient completions hit corners", plain(c7)},
      {"two-school stable completions hit corners", plain(c8)},
      {"double auction price selections hit corners", plain(c9)},
      {"count protocols: tatonnement, CP, discovered phase", plain(c10)},
      {"four-profile school instance: full obstruction case list, no elicit+count protocol", plain(c11)},
      {"multi-count matching protocol: tatonnement and stable", plain(c12)},
      {"non-clinching rule: SP, group CP, no OSP protocol", plain(c13)},
      {"random rules: synthesis, witness oracle and search agree", c14},
      {"random and built-in protocols: implication chain", c15},
      {"rank payments: only the first price is efficient and private", plain(c16)},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    std::string status = "PASS", detail;
    try {
      detail = criteria[i].second();
    } catch (const Fail& f) {
      status = "FAIL";
      detail = f.why;
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = std::string("exception: ") + e.what();
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f ms", ms);
    std::cout << "[" << status << "] " << (i + 1) << " " << criteria[i].first << " (" << buf << ")";
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << std::endl;
    failed += status == "FAIL";
  }
  return failed == 0 ? 0 : 1;
}
