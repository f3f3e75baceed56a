#include "mucalc.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <unordered_map>

namespace mpst {

bool LabelPattern::matches(const TransitionLabel& l) const {
  if (kind && *kind != l.kind) return false;
  if (session && *session != l.session) return false;
  if (p && *p != l.p) return false;
  if (q && *q != l.q) return false;
  if (label && *label != l.label) return false;
  if (payload && !payload_equal(*payload, l.payload)) return false;
  return true;
}

std::string LabelPattern::render() const {
  std::string out = "[";
  auto add = [&](const char* k, const std::string& v) {
    if (out.size() > 1) out += " ";
    out += k;
    out += "=";
    out += v;
  };
  if (kind) {
    const char* n = "?";
    switch (*kind) {
      case ActKind::Output: n = "out"; break;
      case ActKind::Input: n = "in"; break;
      case ActKind::Comm: n = "comm"; break;
      case ActKind::Crash: n = "crash"; break;
      case ActKind::CrashDetect: n = "crdet"; break;
      case ActKind::Stopped: n = "stop"; break;
    }
    add("kind", n);
  }
  if (session) add("s", *session);
  if (p) add("p", *p);
  if (q) add("q", *q);
  if (label) add("l", *label);
  if (payload)
    add("S", payload->is_session() ? type_short(payload->session) : sort_name(payload->sort));
  out += "]";
  return out;
}

namespace {
FormulaRef mk(Formula&& f) { return std::make_shared<const Formula>(std::move(f)); }
}  // namespace

FormulaRef f_true() {
  static const FormulaRef v = mk(Formula{.kind = FKind::True});
  return v;
}
FormulaRef f_false() {
  static const FormulaRef v = mk(Formula{.kind = FKind::False});
  return v;
}
FormulaRef f_var(int index, std::string hint) {
  return mk(Formula{.kind = FKind::Var, .var = index, .var_hint = std::move(hint)});
}
FormulaRef f_and(std::vector<FormulaRef> kids) {
  if (kids.empty()) return f_true();
  if (kids.size() == 1) return kids[0];
  return mk(Formula{.kind = FKind::And, .kids = std::move(kids)});
}
FormulaRef f_or(std::vector<FormulaRef> kids) {
  if (kids.empty()) return f_false();
  if (kids.size() == 1) return kids[0];
  return mk(Formula{.kind = FKind::Or, .kids = std::move(kids)});
}
FormulaRef f_implies(FormulaRef a, FormulaRef b) {
  return mk(Formula{.kind = FKind::Implies, .kids = {std::move(a), std::move(b)}});
}
FormulaRef f_box(LabelPattern pat, FormulaRef body) {
  return mk(Formula{.kind = FKind::Box, .kids = {std::move(body)}, .pat = std::move(pat)});
}
FormulaRef f_diamond(LabelPattern pat, FormulaRef body) {
  return mk(Formula{.kind = FKind::Diamond, .kids = {std::move(body)}, .pat = std::move(pat)});
}
FormulaRef f_lfp(FormulaRef body, std::string hint) {
  return mk(Formula{.kind = FKind::Lfp, .kids = {std::move(body)}, .var_hint = std::move(hint)});
}
FormulaRef f_gfp(FormulaRef body, std::string hint) {
  return mk(Formula{.kind = FKind::Gfp, .kids = {std::move(body)}, .var_hint = std::move(hint)});
}

namespace {

void render_rec(const FormulaRef& f, std::vector<std::string>& stack, std::string& out) {
  switch (f->kind) {
    case FKind::True: out += "tt"; return;
    case FKind::False: out += "ff"; return;
    case FKind::Var: {
      int i = static_cast<int>(stack.size()) - 1 - f->var;
      out += (i >= 0) ? stack[static_cast<std::size_t>(i)] : "?" + std::to_string(f->var);
      return;
    }
    case FKind::And:
    case FKind::Or: {
      out += "(";
      for (std::size_t i = 0; i < f->kids.size(); ++i) {
        if (i) out += f->kind == FKind::And ? " & " : " | ";
        render_rec(f->kids[i], stack, out);
      }
      out += ")";
      return;
    }
    case FKind::Implies:
      out += "(";
      render_rec(f->kids[0], stack, out);
      out += " => ";
      render_rec(f->kids[1], stack, out);
      out += ")";
      return;
    case FKind::Box:
      out += f->pat.render();
      render_rec(f->kids[0], stack, out);
      return;
    case FKind::Diamond:
      out += "<" + f->pat.render().substr(1, f->pat.render().size() - 2) + ">";
      render_rec(f->kids[0], stack, out);
      return;
    case FKind::Lfp:
    case FKind::Gfp: {
      std::string name = f->var_hint.empty()
                             ? std::string(1, f->kind == FKind::Lfp ? 'Y' : 'X') +
                                   std::to_string(stack.size())
                             : f->var_hint;
      out += f->kind == FKind::Lfp ? "mu " : "nu ";
      out += name + ". ";
      stack.push_back(name);
      render_rec(f->kids[0], stack, out);
      stack.pop_back();
      return;
    }
  }
}

}  // namespace

std::string formula_render(const FormulaRef& f) {
  std::vector<std::string> stack;
  std::string out;
  render_rec(f, stack, out);
  return out;
}

StateSet set_make(std::size_t n, bool value) {
  StateSet s((n + 63) / 64, value ? ~0ULL : 0ULL);
  if (value && n % 64) s.back() = (1ULL << (n % 64)) - 1;
  return s;
}
bool set_get(const StateSet& s, std::size_t i) { return (s[i / 64] >> (i % 64)) & 1; }
void set_put(StateSet& s, std::size_t i, bool v) {
  if (v)
    s[i / 64] |= 1ULL << (i % 64);
  else
    s[i / 64] &= ~(1ULL << (i % 64));
}
bool set_eq(const StateSet& a, const StateSet& b) { return a == b; }

namespace {

struct Evaluator {
  const Lts& lts;
  std::size_t n;
  std::size_t words;
  // Free-variable count per node: the number of enclosing binders a node needs.
  std::unordered_map<const Formula*, int> needs;
  std::unordered_map<const Formula*, StateSet> memo;  // closed nodes only
  std::unordered_map<std::string, std::vector<std::uint32_t>> pattern_edges;
  std::vector<StateSet> env;  // stack of fixpoint variable values

  explicit Evaluator(const Lts& l) : lts(l), n(l.states.size()), words((n + 63) / 64) {}

  int need(const FormulaRef& f) {
    auto it = needs.find(f.get());
    if (it != needs.end()) return it->second;
    int r = 0;
    switch (f->kind) {
      case FKind::Var: r = f->var + 1; break;
      case FKind::Lfp:
      case FKind::Gfp: r = std::max(0, need(f->kids[0]) - 1); break;
      case FKind::Implies:
        if (need(f->kids[0]) != 0)
          throw std::runtime_error("implication antecedent must be closed (monotonicity)");
        r = need(f->kids[1]);
        break;
      default:
        for (const FormulaRef& k : f->kids) r = std::max(r, need(k));
        break;
    }
    needs.emplace(f.get(), r);
    return r;
  }

  const std::vector<std::uint32_t>& edges_matching(const LabelPattern& pat) {
    std::string key = pat.render();
    auto it = pattern_edges.find(key);
    if (it != pattern_edges.end()) return it->second;
    std::vector<std::uint32_t> idx;
    for (std::uint32_t i = 0; i < lts.edges.size(); ++i)
      if (pat.matches(lts.edges[i].label)) idx.push_back(i);
    return pattern_edges.emplace(std::move(key), std::move(idx)).first->second;
  }

  StateSet ev(const FormulaRef& f) {
    bool closed = need(f) == 0;
    if (closed) {
      auto it = memo.find(f.get());
      if (it != memo.end()) return it->second;
    }
    StateSet result;
    switch (f->kind) {
      case FKind::True: result = set_make(n, true); break;
      case FKind::False: result = set_make(n, false); break;
      case FKind::Var: {
        std::size_t i = env.size() - 1 - static_cast<std::size_t>(f->var);
        result = env[i];
        break;
      }
      case FKind::And: {
        result = set_make(n, true);
        for (const FormulaRef& k : f->kids) {
          StateSet s = ev(k);
          for (std::size_t w = 0; w < words; ++w) result[w] &= s[w];
        }
        break;
      }
      case FKind::Or: {
        result = set_make(n, false);
        for (const FormulaRef& k : f->kids) {
          StateSet s = ev(k);
          for (std::size_t w = 0; w < words; ++w) result[w] |= s[w];
        }
        break;
      }
      case FKind::Implies: {
        StateSet a = ev(f->kids[0]);
        StateSet b = ev(f->kids[1]);
        result = set_make(n, true);
        // mask off tail bits: make(true) already clears them
        for (std::size_t w = 0; w < words; ++w) result[w] &= ~a[w] | b[w];
        break;
      }
      case FKind::Box: {
        StateSet body = ev(f->kids[0]);
        result = set_make(n, true);
        for (std::uint32_t i : edges_matching(f->pat)) {
          const Lts::Edge& e = lts.edges[i];
          if (!set_get(body, e.to)) set_put(result, e.from, false);
        }
        break;
      }
      case FKind::Diamond: {
        StateSet body = ev(f->kids[0]);
        result = set_make(n, false);
        for (std::uint32_t i : edges_matching(f->pat)) {
          const Lts::Edge& e = lts.edges[i];
          if (set_get(body, e.to)) set_put(result, e.from, true);
        }
        break;
      }
      case FKind::Lfp:
      case FKind::Gfp: {
        env.push_back(set_make(n, f->kind == FKind::Gfp));
        while (true) {
          StateSet next = ev(f->kids[0]);
          if (set_eq(next, env.back())) break;
          env.back() = std::move(next);
        }
        result = std::move(env.back());
        env.pop_back();
        break;
      }
    }
    if (closed) memo.emplace(f.get(), result);
    return result;
  }
};

}  // namespace

StateSet eval(const Lts& lts, const FormulaRef& f) {
  Evaluator e(lts);
  if (e.need(f) != 0) throw std::runtime_error("formula has free fixpoint variables");
  return e.ev(f);
}

bool eval_initial(const Lts& lts, const FormulaRef& f) {
  if (lts.states.empty()) return true;
  return set_get(eval(lts, f), 0);
}

std::vector<TransitionLabel> lts_alphabet(const Lts& lts) {
  std::vector<TransitionLabel> out;
  for (const Lts::Edge& e : lts.edges) out.push_back(e.label);
  std::sort(out.begin(), out.end(),
            [](const TransitionLabel& a, const TransitionLabel& b) {
              return label_compare(a, b) < 0;
            });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Exact pattern for one observed label.
LabelPattern pat_exact(const TransitionLabel& l) {
  LabelPattern p;
  p.kind = l.kind;
  p.session = l.session;
  p.p = l.p;
  if (l.kind != ActKind::Crash && l.kind != ActKind::Stopped) p.q = l.q;
  if (l.kind == ActKind::Output || l.kind == ActKind::Input || l.kind == ActKind::Comm)
    p.label = l.label;
  if (l.kind == ActKind::Output || l.kind == ActKind::Input) p.payload = l.payload;
  return p;
}

LabelPattern pat_comm(const std::string& s, const std::string& p, const std::string& q,
                      const std::string& l) {
  LabelPattern out;
  out.kind = ActKind::Comm;
  out.session = s;
  out.p = p;
  out.q = q;
  out.label = l;
  return out;
}

LabelPattern pat_crdet(const std::string& s, const std::string& detector,
                       const std::string& crashed) {
  LabelPattern out;
  out.kind = ActKind::CrashDetect;
  out.session = s;
  out.p = detector;
  out.q = crashed;
  return out;
}

LabelPattern pat_crash(const std::string& s, const std::string& p) {
  LabelPattern out;
  out.kind = ActKind::Crash;
  out.session = s;
  out.p = p;
  return out;
}

LabelPattern pat_stopped(const std::string& s, const std::string& p) {
  LabelPattern out;
  out.kind = ActKind::Stopped;
  out.session = s;
  out.p = p;
  return out;
}

struct Alpha {
  std::vector<TransitionLabel> outs, ins, comms, crashes, crdets, stops;
  std::vector<std::pair<std::string, std::string>> comm_pairs;   // (p,q) with comm or lost comm
  std::vector<std::pair<std::string, std::string>> crdet_pairs;  // (detector, crashed)
  std::string session;

  explicit Alpha(const std::vector<TransitionLabel>& alphabet) {
    for (const TransitionLabel& l : alphabet) {
      session = l.session;
      switch (l.kind) {
        case ActKind::Output: outs.push_back(l); break;
        case ActKind::Input: ins.push_back(l); break;
        case ActKind::Comm: comms.push_back(l); break;
        case ActKind::Crash: crashes.push_back(l); break;
        case ActKind::CrashDetect: crdets.push_back(l); break;
        case ActKind::Stopped: stops.push_back(l); break;
      }
    }
    auto add_pair = [](std::vector<std::pair<std::string, std::string>>& v,
                       const std::string& a, const std::string& b) {
      std::pair<std::string, std::string> x{a, b};
      if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    };
    for (const TransitionLabel& l : comms) add_pair(comm_pairs, l.p, l.q);
    for (const TransitionLabel& l : crdets) add_pair(crdet_pairs, l.p, l.q);
  }

  std::vector<std::string> comm_labels(const std::string& p, const std::string& q) const {
    std::vector<std::string> out;
    for (const TransitionLabel& l : comms)
      if (l.p == p && l.q == q &&
          std::find(out.begin(), out.end(), l.label) == out.end())
        out.push_back(l.label);
    return out;
  }

  bool has_crdet(const std::string& detector, const std::string& crashed) const {
    for (const TransitionLabel& l : crdets)
      if (l.p == detector && l.q == crashed) return true;
    return false;
  }
};

// All-reduction-successor boxes: [comm]X & [crash]X & [crdet]X per observed label.
FormulaRef all_reductions_into(const Alpha& a, const FormulaRef& x) {
  std::vector<FormulaRef> boxes;
  for (const TransitionLabel& l : a.comms) boxes.push_back(f_box(pat_exact(l), x));
  for (const TransitionLabel& l : a.crashes) boxes.push_back(f_box(pat_exact(l), x));
  for (const TransitionLabel& l : a.crdets) boxes.push_back(f_box(pat_exact(l), x));
  return f_and(std::move(boxes));
}

// The liveness progress disjunct: some pair can transmit or detect now, and
// every way it does so lands back in Y. The crash of the pair's sender is also
// folded into Y so the argument survives interleaved failures.
FormulaRef progress_disjunct(const Alpha& a) {
  FormulaRef y = f_var(0, "Y");
  std::vector<FormulaRef> options;
  // Pairs able to communicate.
  auto emit = [&](const std::string& p, const std::string& q, bool with_comm, bool with_crdet) {
    std::vector<FormulaRef> enabled;
    if (with_comm)
      for (const std::string& l : a.comm_labels(p, q))
        enabled.push_back(f_diamond(pat_comm(a.session, p, q, l), f_true()));
    if (with_crdet) enabled.push_back(f_diamond(pat_crdet(a.session, q, p), f_true()));
    std::vector<FormulaRef> follow;
    for (const std::string& l : a.comm_labels(p, q))
      follow.push_back(f_box(pat_comm(a.session, p, q, l), y));
    follow.push_back(f_box(pat_crash(a.session, p), y));
    follow.push_back(f_box(pat_crdet(a.session, q, p), y));
    options.push_back(f_and({f_or(std::move(enabled)), f_and(std::move(follow))}));
  };
  for (const auto& [p, q] : a.comm_pairs) emit(p, q, true, a.has_crdet(q, p));
  for (const auto& [det, crashed] : a.crdet_pairs) {
    // Pairs that can only detect (no communication observed for them).
    bool seen = false;
    for (const auto& [p, q] : a.comm_pairs)
      if (p == crashed && q == det) { seen = true; break; }
    if (!seen) emit(crashed, det, false, true);
  }
  return f_or(std::move(options));
}

FormulaRef encode_safe(const Alpha& a) {
  std::vector<FormulaRef> conj;
  // A stopped sender with a listening receiver must be detectable.
  for (const TransitionLabel& st : a.stops) {
    for (const TransitionLabel& in : a.ins) {
      if (in.q != st.p) continue;  // in.q is the sender side of the input barb
      conj.push_back(f_implies(
          f_and({f_diamond(pat_exact(st), f_true()), f_diamond(pat_exact(in), f_true())}),
          f_diamond(pat_crdet(a.session, in.p, st.p), f_true())));
    }
  }
  // An enabled send with a ready (or stopped) receiver must be transmittable
  // with that same label.
  for (const TransitionLabel& out : a.outs) {
    std::vector<FormulaRef> ready;
    for (const TransitionLabel& in : a.ins)
      if (in.p == out.q && in.q == out.p) ready.push_back(f_diamond(pat_exact(in), f_true()));
    ready.push_back(f_diamond(pat_stopped(a.session, out.q), f_true()));
    conj.push_back(f_implies(
        f_and({f_diamond(pat_exact(out), f_true()), f_or(std::move(ready))}),
        f_diamond(pat_comm(a.session, out.p, out.q, out.label), f_true())));
  }
  conj.push_back(all_reductions_into(a, f_var(0, "X")));
  return f_gfp(f_and(std::move(conj)), "X");
}

// Shared body of deadlock-freedom and termination: when no transmission or
// detection is possible, no send barb and no non-crash receive barb remains.
FormulaRef df_body(const Alpha& a) {
  std::vector<FormulaRef> stuck;
  for (const TransitionLabel& l : a.comms) stuck.push_back(f_box(pat_exact(l), f_false()));
  for (const TransitionLabel& l : a.crdets) stuck.push_back(f_box(pat_exact(l), f_false()));
  std::vector<FormulaRef> quiet;
  for (const TransitionLabel& l : a.outs) quiet.push_back(f_box(pat_exact(l), f_false()));
  for (const TransitionLabel& l : a.ins)
    if (l.label != kCrashLabel) quiet.push_back(f_box(pat_exact(l), f_false()));
  return f_and({f_implies(f_and(std::move(stuck)), f_and(std::move(quiet))),
                all_reductions_into(a, f_var(0, "X"))});
}

FormulaRef encode_nterm(const Alpha& a) {
  std::vector<FormulaRef> can;
  for (const TransitionLabel& l : a.comms) can.push_back(f_diamond(pat_exact(l), f_true()));
  for (const TransitionLabel& l : a.crdets) can.push_back(f_diamond(pat_exact(l), f_true()));
  return f_gfp(f_and({f_or(std::move(can)), all_reductions_into(a, f_var(0, "X"))}), "X");
}

FormulaRef encode_live(const Alpha& a) {
  FormulaRef progress = progress_disjunct(a);
  std::vector<FormulaRef> conj;

  // Input obligations per ordered pair (sender p, receiver q): a non-crash
  // receive barb must eventually be met by a transmission or a detection.
  std::vector<std::pair<std::string, std::string>> in_pairs;
  for (const TransitionLabel& l : a.ins) {
    if (l.label == kCrashLabel) continue;
    std::pair<std::string, std::string> pr{l.q, l.p};  // (from, receiver)
    if (std::find(in_pairs.begin(), in_pairs.end(), pr) == in_pairs.end())
      in_pairs.push_back(pr);
  }
  for (const auto& [p, q] : in_pairs) {
    std::vector<FormulaRef> barbs;
    for (const TransitionLabel& l : a.ins)
      if (l.q == p && l.p == q && l.label != kCrashLabel)
        barbs.push_back(f_diamond(pat_exact(l), f_true()));
    std::vector<FormulaRef> target;
    for (const std::string& l : a.comm_labels(p, q))
      target.push_back(f_diamond(pat_comm(a.session, p, q, l), f_true()));
    target.push_back(f_diamond(pat_crdet(a.session, q, p), f_true()));
    target.push_back(progress);
    conj.push_back(f_implies(f_or(std::move(barbs)),
                             f_lfp(f_or(std::move(target)), "Y")));
  }

  // Output obligations per observed send barb: eventually this pair transmits.
  std::vector<std::pair<std::string, std::string>> out_pairs;
  for (const TransitionLabel& l : a.outs) {
    std::pair<std::string, std::string> pr{l.p, l.q};
    if (std::find(out_pairs.begin(), out_pairs.end(), pr) == out_pairs.end())
      out_pairs.push_back(pr);
  }
  for (const auto& [p, q] : out_pairs) {
    std::vector<FormulaRef> barbs;
    for (const TransitionLabel& l : a.outs)
      if (l.p == p && l.q == q) barbs.push_back(f_diamond(pat_exact(l), f_true()));
    std::vector<FormulaRef> target;
    for (const std::string& l : a.comm_labels(p, q))
      target.push_back(f_diamond(pat_comm(a.session, p, q, l), f_true()));
    target.push_back(progress);
    conj.push_back(f_implies(f_or(std::move(barbs)),
                             f_lfp(f_or(std::move(target)), "Y")));
  }

  conj.push_back(all_reductions_into(a, f_var(0, "X")));
  return f_gfp(f_and(std::move(conj)), "X");
}

}  // namespace

FormulaRef encode(PropertyKind prop, const std::vector<TransitionLabel>& alphabet) {
  Alpha a(alphabet);
  switch (prop) {
    case PropertyKind::Safe: return encode_safe(a);
    case PropertyKind::Df: return f_gfp(df_body(a), "X");
    case PropertyKind::Term: return f_lfp(df_body(a), "X");
    case PropertyKind::Nterm: return encode_nterm(a);
    case PropertyKind::Live: return encode_live(a);
  }
  return f_true();
}

}  // namespace mpst
