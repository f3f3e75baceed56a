#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mucalc.hpp"
#include "properties.hpp"
#include "statespace.hpp"

using namespace mpst;

namespace {

StateSet complement(const StateSet& s, std::size_t n) {
  StateSet out = set_make(n, false);
  for (std::size_t i = 0; i < n; ++i) set_put(out, i, !set_get(s, i));
  return out;
}

bool subset(const StateSet& a, const StateSet& b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (set_get(a, i) && !set_get(b, i)) return false;
  return true;
}

Lts load_variant(const char* file, bool declared, std::vector<std::string> reliable = {}) {
  ContextDocument doc = testutil::load_context(file);
  if (declared) reliable = doc.reliable;
  return testutil::build_or_throw(doc.to_context(), doc.session, reliable);
}

std::vector<std::string> all_roles(const char* file) {
  ContextDocument doc = testutil::load_context(file);
  std::vector<std::string> roles;
  for (const auto& [ep, ty] : doc.bindings) roles.push_back(ep.role);
  return roles;
}

// Fixpoint-free random formulas plus their syntactic complements.
struct ModalGen {
  std::mt19937 rng;
  std::vector<LabelPattern> pats;

  explicit ModalGen(std::uint32_t seed, const Lts& lts) : rng(seed) {
    pats.push_back({});  // matches anything
    LabelPattern comm;
    comm.kind = ActKind::Comm;
    pats.push_back(comm);
    LabelPattern crash;
    crash.kind = ActKind::Crash;
    pats.push_back(crash);
    LabelPattern from_p;
    from_p.p = "p";
    pats.push_back(from_p);
    auto alphabet = lts_alphabet(lts);
    if (!alphabet.empty()) {
      LabelPattern exact;
      const TransitionLabel& l = alphabet[alphabet.size() / 2];
      exact.kind = l.kind;
      exact.session = l.session;
      exact.p = l.p;
      exact.q = l.q;
      exact.label = l.label;
      pats.push_back(exact);
    }
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  FormulaRef gen(int depth) {
    if (depth <= 0) return pick(2) ? f_true() : f_false();
    switch (pick(6)) {
      case 0: return f_true();
      case 1: return f_false();
      case 2: return f_and({gen(depth - 1), gen(depth - 1)});
      case 3: return f_or({gen(depth - 1), gen(depth - 1)});
      case 4: return f_box(pats[static_cast<std::size_t>(pick(static_cast<int>(pats.size())))], gen(depth - 1));
      default:
        return f_diamond(pats[static_cast<std::size_t>(pick(static_cast<int>(pats.size())))], gen(depth - 1));
    }
  }
};

// Syntactic dual of a fixpoint-free formula: evaluates to the complement.
FormulaRef dual(const FormulaRef& f) {
  switch (f->kind) {
    case FKind::True: return f_false();
    case FKind::False: return f_true();
    case FKind::And: {
      std::vector<FormulaRef> kids;
      for (const auto& k : f->kids) kids.push_back(dual(k));
      return f_or(std::move(kids));
    }
    case FKind::Or: {
      std::vector<FormulaRef> kids;
      for (const auto& k : f->kids) kids.push_back(dual(k));
      return f_and(std::move(kids));
    }
    case FKind::Implies: return f_and({f->kids[0], dual(f->kids[1])});
    case FKind::Box: return f_diamond(f->pat, dual(f->kids[0]));
    case FKind::Diamond: return f_box(f->pat, dual(f->kids[0]));
    default: throw std::runtime_error("dual: fixpoints unsupported");
  }
}

}  // namespace

TEST_CASE("box and diamond are dual on corpus spaces") {
  for (const char* file : {"dns.mpst", "gamma_a.mpst", "gamma_b.mpst"}) {
    CAPTURE(file);
    Lts lts = load_variant(file, false);
    std::size_t n = lts.states.size();
    ModalGen gen(5150, lts);
    for (int i = 0; i < 200; ++i) {
      FormulaRef f = gen.gen(3);
      CAPTURE(formula_render(f));
      CHECK(set_eq(eval(lts, dual(f)), complement(eval(lts, f), n)));
    }
  }
}

TEST_CASE("implication means material implication") {
  Lts lts = load_variant("gamma_a.mpst", false);
  std::size_t n = lts.states.size();
  ModalGen gen(17, lts);
  for (int i = 0; i < 100; ++i) {
    FormulaRef a = gen.gen(2);
    FormulaRef b = gen.gen(2);
    StateSet lhs = eval(lts, f_implies(a, b));
    StateSet expect = set_make(n, false);
    StateSet sa = eval(lts, a);
    StateSet sb = eval(lts, b);
    for (std::size_t s = 0; s < n; ++s) set_put(expect, s, !set_get(sa, s) || set_get(sb, s));
    CHECK(set_eq(lhs, expect));
  }
}

TEST_CASE("least fixpoints are below greatest fixpoints") {
  for (const char* file : {"dns.mpst", "gamma_b.mpst"}) {
    CAPTURE(file);
    Lts lts = load_variant(file, true);
    std::size_t n = lts.states.size();
    // bare variable: lfp is empty, gfp is everything
    CHECK(set_eq(eval(lts, f_lfp(f_var(0))), set_make(n, false)));
    CHECK(set_eq(eval(lts, f_gfp(f_var(0))), set_make(n, true)));
    LabelPattern any;
    std::vector<FormulaRef> bodies = {
        f_or({f_box(any, f_false()), f_diamond(any, f_var(0))}),
        f_diamond(any, f_var(0)),
        f_and({f_box(any, f_var(0)), f_diamond(any, f_true())}),
    };
    for (const auto& body : bodies) {
      CAPTURE(formula_render(body));
      CHECK(subset(eval(lts, f_lfp(body)), eval(lts, f_gfp(body)), n));
    }
    // gfp of <any>X marks exactly the states with an infinite path
    StateSet inf = eval(lts, f_gfp(f_diamond(any, f_var(0))));
    for (std::size_t s = 0; s < n; ++s) {
      bool has_succ = lts.out_begin[s + 1] > lts.out_begin[s];
      if (!has_succ) CHECK_FALSE(set_get(inf, s));
    }
  }
}

TEST_CASE("the never-termination encoding matches the published examples") {
  Lts dns = load_variant("dns.mpst", true);
  CHECK_FALSE(eval_initial(dns, encode(PropertyKind::Nterm, lts_alphabet(dns))));
  Lts gb = load_variant("gamma_b.mpst", false, {"r"});
  CHECK(eval_initial(gb, encode(PropertyKind::Nterm, lts_alphabet(gb))));
}

TEST_CASE("formula encodings agree with the direct checkers on the corpus") {
  struct Variant {
    const char* file;
    bool declared;
    bool all;
  };
  const Variant kVariants[] = {
      {"dns.mpst", true, false},      {"dns.mpst", false, false},  {"dns.mpst", false, true},
      {"adder.mpst", true, false},    {"adder.mpst", false, true}, {"twobuyers.mpst", true, false},
      {"negotiate.mpst", true, false}, {"broadcast.mpst", true, false},
      {"broadcast.mpst", false, true}, {"gamma_a.mpst", true, false},
      {"gamma_a.mpst", false, true},  {"gamma_b.mpst", true, false},
      {"gamma_c.mpst", true, false},  {"gamma_c.mpst", false, true},
  };
  for (const Variant& v : kVariants) {
    CAPTURE(v.file);
    CAPTURE(v.all);
    Lts lts = v.all ? load_variant(v.file, false, all_roles(v.file)) : load_variant(v.file, v.declared);
    auto alphabet = lts_alphabet(lts);
    CHECK(eval_initial(lts, encode(PropertyKind::Safe, alphabet)) == check_safety(lts).holds);
    CHECK(eval_initial(lts, encode(PropertyKind::Df, alphabet)) == check_deadlock_free(lts).holds);
    CHECK(eval_initial(lts, encode(PropertyKind::Term, alphabet)) == check_terminating(lts).holds);
    CHECK(eval_initial(lts, encode(PropertyKind::Nterm, alphabet)) ==
          check_never_terminating(lts).holds);
    Verdict oracle = fair_lasso_oracle(lts);
    if (oracle.conclusive)
      CHECK(eval_initial(lts, encode(PropertyKind::Live, alphabet)) == oracle.holds);
  }
}

TEST_CASE("renderings are printable") {
  Lts lts = load_variant("dns.mpst", true);
  auto alphabet = lts_alphabet(lts);
  CHECK_FALSE(alphabet.empty());
  for (PropertyKind k : {PropertyKind::Safe, PropertyKind::Df, PropertyKind::Term,
                         PropertyKind::Nterm, PropertyKind::Live})
    CHECK_FALSE(formula_render(encode(k, alphabet)).empty());
  LabelPattern p;
  p.kind = ActKind::Comm;
  CHECK_FALSE(p.render().empty());
}
