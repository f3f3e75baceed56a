#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "context.hpp"
#include "helpers.hpp"
#include "mucalc.hpp"
#include "properties.hpp"
#include "statespace.hpp"

using namespace mpst;

namespace {

struct VerdictRow {
  const char* file;
  const char* variant;  // "decl", "none", "all", or a single role
  bool safe, df, live, term, nterm;
};

// Frozen verdict oracle for every corpus protocol and reliability variant.
const VerdictRow kMatrix[] = {
    {"dns.mpst", "decl", true, true, true, true, false},
    {"dns.mpst", "none", false, false, false, false, false},
    {"dns.mpst", "all", true, true, true, true, false},
    {"adder.mpst", "decl", true, true, true, false, false},
    {"adder.mpst", "all", true, true, true, false, false},
    {"twobuyers.mpst", "decl", true, true, true, true, false},
    {"twobuyers.mpst", "all", true, true, true, true, false},
    {"negotiate.mpst", "decl", true, true, true, false, false},
    {"negotiate.mpst", "all", true, true, true, false, false},
    {"broadcast.mpst", "decl", true, true, true, true, false},
    {"broadcast.mpst", "all", true, true, true, true, false},
    {"gamma_a.mpst", "decl", true, false, false, false, false},
    {"gamma_a.mpst", "r", true, false, false, false, false},
    {"gamma_a.mpst", "all", true, true, true, false, false},
    {"gamma_b.mpst", "decl", true, true, false, false, false},
    {"gamma_b.mpst", "r", true, true, false, false, true},
    {"gamma_b.mpst", "all", true, true, false, false, true},
    {"gamma_c.mpst", "decl", false, false, false, false, false},
    {"gamma_c.mpst", "p", true, true, true, false, false},
    {"gamma_c.mpst", "all", true, true, true, true, false},
};

Lts build_variant(const char* file, const std::string& variant) {
  ContextDocument doc = testutil::load_context(file);
  std::vector<std::string> reliable;
  if (variant == "decl") {
    reliable = doc.reliable;
  } else if (variant == "none") {
  } else if (variant == "all") {
    for (const auto& [ep, ty] : doc.bindings) reliable.push_back(ep.role);
  } else {
    reliable.push_back(variant);
  }
  return testutil::build_or_throw(doc.to_context(), doc.session, reliable);
}

// Replays a witness trace against the LTS: the trace must start at the
// initial state, follow real edges rendered exactly like DOT labels, close
// any cycle on itself, and end in a violation line.
void replay(const Lts& lts, const std::vector<std::string>& witness) {
  REQUIRE(witness.size() >= 2);
  REQUIRE(witness.front() == context_short(lts.states[0]));
  REQUIRE(witness.back().rfind("violation: ", 0) == 0);
  std::uint32_t cur = 0;
  bool in_cycle = false;
  std::uint32_t cycle_start = 0;
  for (std::size_t i = 1; i + 1 < witness.size(); ++i) {
    const std::string& line = witness[i];
    if (line == "cycle:") {
      in_cycle = true;
      cycle_start = cur;
      continue;
    }
    REQUIRE(line.rfind("--[ ", 0) == 0);
    std::size_t sep = line.find(" ]--> ");
    REQUIRE(sep != std::string::npos);
    std::string label = line.substr(4, sep - 4);
    std::string state = line.substr(sep + 6);
    bool advanced = false;
    for (std::uint32_t k = lts.out_begin[cur]; k < lts.out_begin[cur + 1] && !advanced; ++k) {
      const Lts::Edge& e = lts.edges[k];
      if (label_render(e.label) == label && context_short(lts.states[e.to]) == state) {
        cur = e.to;
        advanced = true;
      }
    }
    CAPTURE(line);
    REQUIRE(advanced);
  }
  if (in_cycle) CHECK(cur == cycle_start);
}

}  // namespace

TEST_CASE("property verdicts match the frozen oracle") {
  for (const VerdictRow& row : kMatrix) {
    CAPTURE(row.file);
    CAPTURE(row.variant);
    Lts lts = build_variant(row.file, row.variant);
    Verdict safe = check_safety(lts);
    Verdict df = check_deadlock_free(lts);
    Verdict live = check_live(lts);
    Verdict term = check_terminating(lts);
    Verdict nterm = check_never_terminating(lts);
    CHECK(safe.conclusive);
    CHECK(df.conclusive);
    CHECK(live.conclusive);
    CHECK(term.conclusive);
    CHECK(nterm.conclusive);
    CHECK(safe.holds == row.safe);
    CHECK(df.holds == row.df);
    CHECK(live.holds == row.live);
    CHECK(term.holds == row.term);
    CHECK(nterm.holds == row.nterm);
  }
}

TEST_CASE("failing verdicts come with replayable witnesses") {
  for (const VerdictRow& row : kMatrix) {
    CAPTURE(row.file);
    CAPTURE(row.variant);
    Lts lts = build_variant(row.file, row.variant);
    for (Verdict v : {check_safety(lts), check_deadlock_free(lts), check_terminating(lts),
                      check_never_terminating(lts), check_live(lts)}) {
      if (v.holds || v.witness.empty()) continue;
      replay(lts, v.witness);
    }
  }
}

TEST_CASE("frozen witness messages on the published examples") {
  Lts dns_none = build_variant("dns.mpst", "none");
  CHECK(check_safety(dns_none).witness.back() ==
        "violation: p has crashed while q still waits on it, but q cannot detect the crash");
  CHECK(check_deadlock_free(dns_none).witness.back() ==
        "violation: deadlock: s[q] = p?{req.p!{res.end}} is neither terminated, crashed, nor "
        "waiting only on a crash");
  CHECK(check_live(dns_none).witness.back() ==
        "violation: receive obligation of q from p can be dodged forever on a fair crash-free "
        "path");
  Lts gb = build_variant("gamma_b.mpst", "decl");
  CHECK(check_live(gb).witness.back() ==
        "violation: send obligation r->q can be dodged forever on a fair crash-free path");
  // mismatched labels hit the transmission arm of the safety checker
  Context g;
  g.set(Endpoint{"s", "p"}, t_internal("q", {testutil::br("a", t_end())}));
  g.set(Endpoint{"s", "q"}, t_external("p", {testutil::br("b", t_end())}));
  Lts mismatch = testutil::build_or_throw(g, "s", {"p", "q"});
  Verdict v = check_safety(mismatch);
  REQUIRE_FALSE(v.holds);
  CHECK(v.witness.back().find("cannot be transmitted") != std::string::npos);
}

TEST_CASE("the property lattice holds on random contexts") {
  testutil::ContextGen gen(1618);
  for (int i = 0; i < 150; ++i) {
    Lts lts;
    testutil::RandomContext rc = gen.gen_bounded(200, &lts);
    Verdict df = check_deadlock_free(lts);
    Verdict term = check_terminating(lts);
    Verdict nterm = check_never_terminating(lts);
    CAPTURE(context_short(rc.g));
    // termination is deadlock freedom plus finiteness of reductions
    if (term.holds) CHECK(df.holds);
    // a space cannot both always terminate and never terminate
    CHECK_FALSE((term.holds && nterm.holds));
    // never-termination leaves no stuck state, so deadlock freedom follows
    if (nterm.holds) CHECK(df.holds);
  }
}

TEST_CASE("liveness implies deadlock freedom on the corpus") {
  for (const VerdictRow& row : kMatrix) {
    CAPTURE(row.file);
    CAPTURE(row.variant);
    if (row.live) CHECK(row.df);
  }
}

TEST_CASE("the liveness oracle agrees with the modal encoding") {
  for (const VerdictRow& row : kMatrix) {
    CAPTURE(row.file);
    CAPTURE(row.variant);
    Lts lts = build_variant(row.file, row.variant);
    Verdict oracle = fair_lasso_oracle(lts);
    REQUIRE(oracle.conclusive);
    CHECK(oracle.holds == row.live);
    CHECK(eval_initial(lts, encode(PropertyKind::Live, lts_alphabet(lts))) == row.live);
  }
  testutil::ContextGen gen(606);
  for (int i = 0; i < 50; ++i) {
    Lts lts;
    testutil::RandomContext rc = gen.gen_bounded(150, &lts);
    Verdict oracle = fair_lasso_oracle(lts);
    if (!oracle.conclusive) continue;
    CAPTURE(context_short(rc.g));
    CHECK(eval_initial(lts, encode(PropertyKind::Live, lts_alphabet(lts))) == oracle.holds);
    CHECK(check_live(lts).holds == oracle.holds);
  }
}

TEST_CASE("a starved work budget reports inconclusive instead of guessing") {
  Lts lts = build_variant("twobuyers.mpst", "decl");
  Verdict v = fair_lasso_oracle(lts, 10);
  CHECK_FALSE(v.conclusive);
  CHECK_FALSE(v.holds);
  REQUIRE_FALSE(v.witness.empty());
  CHECK(v.witness.back().find("budget") != std::string::npos);
}

TEST_CASE("terminating spaces have lasso witnesses when they fail") {
  Lts adder = build_variant("adder.mpst", "decl");
  Verdict term = check_terminating(adder);
  REQUIRE_FALSE(term.holds);
  REQUIRE(term.witness.size() >= 3);
  bool has_cycle_marker = false;
  for (const std::string& line : term.witness) has_cycle_marker = has_cycle_marker || line == "cycle:";
  CHECK(has_cycle_marker);
  CHECK(term.witness.back() == "violation: the reductions above repeat forever");
  replay(adder, term.witness);
}
