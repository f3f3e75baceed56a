#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "context.hpp"
#include "helpers.hpp"
#include "properties.hpp"
#include "statespace.hpp"
#include "types.hpp"

using namespace mpst;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

const TypeRef& entry(const Context& g, const std::string& session, const std::string& role) {
  const TypeRef* t = g.find(Endpoint{session, role});
  REQUIRE(t != nullptr);
  return *t;
}

// Roles whose entry differs between two contexts over the same endpoints.
std::vector<std::string> changed_roles(const Context& a, const Context& b) {
  std::vector<std::string> out;
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    REQUIRE(a.entries[i].first == b.entries[i].first);
    if (!type_equal(a.entries[i].second, b.entries[i].second))
      out.push_back(a.entries[i].first.role);
  }
  return out;
}

}  // namespace

TEST_CASE("transition rules respect their side conditions on random contexts") {
  testutil::ContextGen gen(160301);
  for (int i = 0; i < 400; ++i) {
    testutil::RandomContext rc = gen.gen(3);
    auto succs = successors(rc.g, rc.session, rc.reliable);
    CAPTURE(context_short(rc.g));
    for (const auto& [label, state] : succs) {
      CAPTURE(label_render(label));
      switch (label.kind) {
        case ActKind::Crash: {
          // only unreliable, non-terminated, non-stopped entries crash
          CHECK_FALSE(contains(rc.reliable, label.p));
          const TypeRef& before = entry(rc.g, rc.session, label.p);
          CHECK_FALSE(sub_end(before));
          CHECK(full_unfold(before)->kind != TypeKind::Stop);
          // the crash replaces exactly that entry with stop
          CHECK(changed_roles(rc.g, state) == std::vector<std::string>{label.p});
          CHECK(full_unfold(entry(state, rc.session, label.p))->kind == TypeKind::Stop);
          break;
        }
        case ActKind::Stopped:
          // status barb of a crashed endpoint: a self-loop
          CHECK(context_equal(rc.g, state));
          CHECK(full_unfold(entry(rc.g, rc.session, label.p))->kind == TypeKind::Stop);
          break;
        case ActKind::Output:
        case ActKind::Input: {
          // one-sided barbs advance exactly the acting entry
          auto changed = changed_roles(rc.g, state);
          CHECK(changed.size() <= 1);
          if (changed.size() == 1) CHECK(changed[0] == label.p);
          break;
        }
        case ActKind::CrashDetect: {
          // detector moves into its crash arm (possibly back to the same type
          // when the arm loops); the crashed peer stays stopped
          auto changed = changed_roles(rc.g, state);
          CHECK(changed.size() <= 1);
          if (changed.size() == 1) CHECK(changed[0] == label.p);
          TypeRef det = full_unfold(entry(rc.g, rc.session, label.p));
          bool advanced = false;
          for (const auto& b : det->branches)
            advanced = advanced || (b.label == kCrashLabel &&
                                    type_equal(entry(state, rc.session, label.p), b.cont));
          CHECK(advanced);
          CHECK(full_unfold(entry(rc.g, rc.session, label.q))->kind == TypeKind::Stop);
          CHECK(full_unfold(entry(state, rc.session, label.q))->kind == TypeKind::Stop);
          break;
        }
        case ActKind::Comm: {
          // both parties move to matching branch continuations (an entry can
          // stay equal when its continuation loops back); nobody else moves
          auto changed = changed_roles(rc.g, state);
          for (const auto& r : changed) CHECK((r == label.p || r == label.q));
          TypeRef send = full_unfold(entry(rc.g, rc.session, label.p));
          TypeRef recv = full_unfold(entry(rc.g, rc.session, label.q));
          if (recv->kind == TypeKind::Stop) {
            // lost message: the sender advances alone
            for (const auto& r : changed) CHECK(r == label.p);
            bool advanced = false;
            for (const auto& b : send->branches)
              advanced = advanced || (b.label == label.label &&
                                      type_equal(entry(state, rc.session, label.p), b.cont));
            CHECK(advanced);
          } else {
            bool advanced = false;
            for (const auto& sb : send->branches)
              for (const auto& rb : recv->branches)
                advanced = advanced ||
                           (sb.label == label.label && rb.label == label.label &&
                            payload_sub(sb.payload, rb.payload) &&
                            type_equal(entry(state, rc.session, label.p), sb.cont) &&
                            type_equal(entry(state, rc.session, label.q), rb.cont));
            CHECK(advanced);
          }
          break;
        }
      }
    }
  }
}

TEST_CASE("crashes are idempotent and stopped entries stay stopped") {
  testutil::ContextGen gen(52);
  for (int i = 0; i < 200; ++i) {
    testutil::RandomContext rc = gen.gen(3);
    for (const auto& [label, state] : successors(rc.g, rc.session, rc.reliable)) {
      if (label.kind != ActKind::Crash) continue;
      for (const auto& [label2, state2] : successors(state, rc.session, rc.reliable)) {
        CAPTURE(label_render(label2));
        if (label2.kind == ActKind::Crash) CHECK(label2.p != label.p);
        // no rule revives a stopped entry
        CHECK(full_unfold(entry(state2, rc.session, label.p))->kind == TypeKind::Stop);
      }
    }
  }
}

TEST_CASE("messages into stopped endpoints are lost but never block") {
  testutil::ContextGen gen(9001);
  int observed = 0;
  for (int i = 0; i < 300; ++i) {
    testutil::RandomContext rc = gen.gen(3);
    // crash every unreliable role once to expose stopped receivers
    std::vector<Context> pool = {rc.g};
    for (const auto& [label, state] : successors(rc.g, rc.session, rc.reliable))
      if (label.kind == ActKind::Crash) pool.push_back(state);
    for (const Context& g : pool) {
      auto succs = successors(g, rc.session, rc.reliable);
      for (const auto& [ep, ty] : g.entries) {
        TypeRef head = full_unfold(ty);
        if (head->kind != TypeKind::Internal) continue;
        const TypeRef* peer = g.find(Endpoint{rc.session, head->peer});
        if (!peer || full_unfold(*peer)->kind != TypeKind::Stop) continue;
        // every selection toward the stopped peer can be transmitted (lost)
        for (const Branch& b : head->branches) {
          bool found = false;
          for (const auto& [label, state] : succs)
            found = found || (label.kind == ActKind::Comm && label.p == ep.role &&
                              label.q == head->peer && label.label == b.label);
          CAPTURE(context_short(g));
          CAPTURE(ep.role);
          CAPTURE(b.label);
          CHECK(found);
          ++observed;
        }
      }
    }
  }
  // the scenario must actually occur in the sample
  CHECK(observed > 50);
}

TEST_CASE("reduction modes filter barbs and crashes") {
  testutil::ContextGen gen(777);
  for (int i = 0; i < 200; ++i) {
    testutil::RandomContext rc = gen.gen(3);
    auto noncrash = reduction_successors(rc.g, rc.session, rc.reliable, ReductionMode::NonCrash);
    auto maybe = reduction_successors(rc.g, rc.session, rc.reliable, ReductionMode::MaybeCrash);
    for (const auto& [label, state] : noncrash)
      CHECK((label.kind == ActKind::Comm || label.kind == ActKind::CrashDetect));
    for (const auto& [label, state] : maybe)
      CHECK((label.kind == ActKind::Comm || label.kind == ActKind::CrashDetect ||
             label.kind == ActKind::Crash));
    CHECK(maybe.size() >= noncrash.size());
    // successors() and the reduction filter agree
    std::size_t reductions = 0;
    for (const auto& [label, state] : successors(rc.g, rc.session, rc.reliable))
      if (label.kind == ActKind::Comm || label.kind == ActKind::CrashDetect ||
          label.kind == ActKind::Crash)
        ++reductions;
    CHECK(reductions == maybe.size());
  }
}

TEST_CASE("successor lists are deterministically ordered") {
  testutil::ContextGen gen(31337);
  for (int i = 0; i < 100; ++i) {
    testutil::RandomContext rc = gen.gen(3);
    auto a = successors(rc.g, rc.session, rc.reliable);
    auto b = successors(rc.g, rc.session, rc.reliable);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(label_compare(a[k].label, b[k].label) == 0);
      CHECK(context_equal(a[k].state, b[k].state));
      if (k + 1 < a.size()) {
        int c = label_compare(a[k].label, a[k + 1].label);
        CHECK(c <= 0);
        if (c == 0) CHECK(context_compare(a[k].state, a[k + 1].state) < 0);
      }
    }
  }
}

TEST_CASE("entries of other sessions are inert") {
  testutil::ContextGen gen(64);
  testutil::RandomContext rc = gen.gen(3);
  Context g = rc.g;
  g.set(Endpoint{"other", "z"}, t_internal("p", {testutil::br("a", t_end())}));
  auto succs = successors(g, rc.session, rc.reliable);
  for (const auto& [label, state] : succs) {
    CHECK(label.session == rc.session);
    const TypeRef* frozen = state.find(Endpoint{"other", "z"});
    REQUIRE(frozen != nullptr);
    CHECK(type_equal(*frozen, *g.find(Endpoint{"other", "z"})));
  }
}

TEST_CASE("pointwise supertyping preserves safety") {
  testutil::ContextGen gen(271828);
  std::mt19937 rng(31415);
  int safe_seen = 0;
  while (safe_seen < 150) {
    Lts lts;
    testutil::RandomContext rc = gen.gen_bounded(200, &lts);
    if (!check_safety(lts).holds) continue;
    ++safe_seen;
    // widen one entry to a supertype; safety must survive
    std::uniform_int_distribution<std::size_t> at(0, rc.g.entries.size() - 1);
    std::size_t idx = at(rng);
    TypeRef wide = testutil::widen(rng, rc.g.entries[idx].second);
    REQUIRE(is_subtype(rc.g.entries[idx].second, wide));
    Context g2 = rc.g;
    g2.set(rc.g.entries[idx].first, wide);
    Lts lts2 = testutil::build_or_throw(g2, rc.session, rc.reliable, LtsLimits{50000, 0});
    CAPTURE(context_short(rc.g));
    CAPTURE(context_short(g2));
    CHECK(check_safety(lts2).holds);
  }
}
