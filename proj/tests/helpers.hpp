#pragma once
// Shared test utilities: corpus loading and seeded random generators.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "context.hpp"
#include "statespace.hpp"
#include "syntax.hpp"
#include "types.hpp"

namespace testutil {

inline std::string corpus_path(const std::string& name) {
  return std::string(PROTO_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline mpst::ContextDocument load_context(const std::string& name) {
  auto parsed = mpst::parse_context(slurp(corpus_path(name)));
  if (auto* pe = std::get_if<mpst::ParseError>(&parsed))
    throw std::runtime_error(name + ": " + pe->render());
  auto doc = std::get<mpst::ContextDocument>(parsed);
  auto problems = mpst::validate_context(doc);
  if (!problems.empty()) throw std::runtime_error(name + ": " + problems.front());
  return doc;
}

inline mpst::ProcessDocument load_process(const std::string& name) {
  auto parsed = mpst::parse_process(slurp(corpus_path(name)));
  if (auto* pe = std::get_if<mpst::ParseError>(&parsed))
    throw std::runtime_error(name + ": " + pe->render());
  return std::get<mpst::ProcessDocument>(parsed);
}

inline mpst::Lts build_or_throw(const mpst::Context& g, const std::string& s,
                                const std::vector<std::string>& reliable,
                                mpst::LtsLimits limits = {}) {
  auto built = mpst::build_lts(g, s, reliable, limits);
  if (auto* lim = std::get_if<mpst::LimitExceeded>(&built))
    throw std::runtime_error("limit exceeded: " + lim->what);
  return std::get<mpst::Lts>(std::move(built));
}

// Deterministic generator of closed, guarded session types without delegation.
// Crash branches appear only in external choices and never carry a payload.
struct TypeGen {
  std::mt19937 rng;
  std::vector<std::string> peers;

  TypeGen(std::uint32_t seed, std::vector<std::string> ps)
      : rng(seed), peers(std::move(ps)) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

  mpst::Payload payload() {
    static const mpst::Sort kSorts[] = {mpst::Sort::Unit, mpst::Sort::Int, mpst::Sort::Bool,
                                        mpst::Sort::Real, mpst::Sort::String};
    return {kSorts[pick(5)], nullptr};
  }

  mpst::TypeRef gen(int depth) {
    mpst::TypeRef t = go(depth, 0, false);
    if (auto bad = mpst::well_formed(t))
      throw std::runtime_error("generator produced a malformed type: " + *bad);
    return t;
  }

 private:
  // `guarded` = some choice prefix lies between the innermost binder and here,
  // which guards every binder in scope; variables are only emitted then.
  mpst::TypeRef go(int depth, int binders, bool guarded) {
    using namespace mpst;
    if (depth <= 0) {
      if (guarded && binders > 0 && coin(0.5)) return t_var(pick(binders));
      return t_end();
    }
    int r = pick(10);
    if (r == 0) return t_end();
    if (r == 1 && guarded && binders > 0) return t_var(pick(binders));
    if (r <= 3) return t_rec(go(depth - 1, binders + 1, false));
    const std::string& peer = peers[pick(static_cast<int>(peers.size()))];
    bool external = r >= 7;
    static const char* kLabels[] = {"a", "b", "c"};
    int width = 1 + pick(3);
    std::vector<Branch> branches;
    for (int i = 0; i < 3 && static_cast<int>(branches.size()) < width; ++i)
      if (coin(0.7)) branches.push_back({kLabels[i], payload(), go(depth - 1, binders, true)});
    if (branches.empty()) branches.push_back({"a", payload(), go(depth - 1, binders, true)});
    if (external && coin(0.4))
      branches.push_back({kCrashLabel, Payload{}, go(depth - 1, binders, true)});
    return external ? t_external(peer, std::move(branches))
                    : t_internal(peer, std::move(branches));
  }
};

inline mpst::Payload pl(mpst::Sort s) { return mpst::Payload{s, nullptr}; }

inline mpst::Branch br(std::string label, mpst::TypeRef cont, mpst::Payload p = {}) {
  return mpst::Branch{std::move(label), p, std::move(cont)};
}

inline bool singleton_crash(const mpst::TypeRef& t) {
  mpst::TypeRef h = mpst::full_unfold(t);
  return h->kind == mpst::TypeKind::External && h->branches.size() == 1 &&
         h->branches[0].label == mpst::kCrashLabel;
}

// Applies random sound supertype transformations: drop internal branches, add
// fresh external branches (never to a protected singleton-crash choice),
// narrow send payloads, lift receive payloads, unfold the root. The result is
// a supertype of the input by construction.
inline mpst::TypeRef widen(std::mt19937& rng, const mpst::TypeRef& t, bool root = true) {
  using namespace mpst;
  auto coin = [&](double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  };
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Stop:
    case TypeKind::Var:
      return t;
    case TypeKind::Rec: {
      if (root && coin(0.3)) return widen(rng, unfold(t), root);
      return t_rec(widen(rng, t->body, false), t->rec_hint);
    }
    case TypeKind::Internal: {
      std::vector<Branch> out;
      for (const Branch& b : t->branches) {
        Payload p = b.payload;
        if (!p.is_session() && p.sort == Sort::Real && coin(0.3)) p.sort = Sort::Int;
        out.push_back({b.label, p, widen(rng, b.cont, false)});
      }
      while (out.size() > 1 && coin(0.25))
        out.erase(out.begin() + pick(static_cast<int>(out.size())));
      return t_internal(t->peer, std::move(out));
    }
    case TypeKind::External: {
      std::vector<Branch> out;
      for (const Branch& b : t->branches) {
        Payload p = b.payload;
        if (!p.is_session() && p.sort == Sort::Int && coin(0.3)) p.sort = Sort::Real;
        out.push_back({b.label, b.label == kCrashLabel ? b.payload : p, widen(rng, b.cont, false)});
      }
      auto has_label = [&out](const char* l) {
        for (const Branch& b : out)
          if (b.label == l) return true;
        return false;
      };
      if (!singleton_crash(t)) {
        if (coin(0.25) && !has_label("x1")) out.push_back(br("x1", t_end(), pl(Sort::Bool)));
        if (coin(0.15) && !has_label("x2")) out.push_back(br("x2", t_end()));
      }
      return t_external(t->peer, std::move(out));
    }
  }
  return t;
}

struct RandomContext {
  std::string session = "s";
  std::vector<std::string> roles;
  std::vector<std::string> reliable;
  mpst::Context g;
};

// Random well-formed contexts over 2..4 roles with random reliability sets.
struct ContextGen {
  std::mt19937 rng;
  explicit ContextGen(std::uint32_t seed) : rng(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

  RandomContext gen(int depth = 4) {
    static const char* kRoles[] = {"p", "q", "r", "w"};
    RandomContext out;
    int nroles = 2 + pick(3);
    for (int i = 0; i < nroles; ++i) out.roles.push_back(kRoles[i]);
    for (int i = 0; i < nroles; ++i) {
      std::vector<std::string> peers;
      for (int j = 0; j < nroles; ++j)
        if (j != i) peers.push_back(out.roles[j]);
      TypeGen tg(rng(), peers);
      out.g.set(mpst::Endpoint{out.session, out.roles[i]}, tg.gen(depth));
    }
    for (const auto& r : out.roles)
      if (coin(1.0 / 3.0)) out.reliable.push_back(r);
    return out;
  }

  // A context whose reduction-reachable fragment is small enough for
  // exhaustive cross-validation; retries until the bound is met.
  RandomContext gen_bounded(std::uint64_t max_red_states, mpst::Lts* lts_out = nullptr) {
    for (;;) {
      RandomContext c = gen();
      auto built = mpst::build_lts(c.g, c.session, c.reliable, mpst::LtsLimits{4000, 0});
      auto* lts = std::get_if<mpst::Lts>(&built);
      if (!lts || lts->red_state_count > max_red_states) continue;
      if (lts_out) *lts_out = std::move(*lts);
      return c;
    }
  }
};

}  // namespace testutil
