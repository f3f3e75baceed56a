#include "types.hpp"

#include <algorithm>
#include <unordered_set>

namespace mpst {

const char* sort_name(Sort s) {
  switch (s) {
    case Sort::Unit: return "unit";
    case Sort::Int: return "int";
    case Sort::Bool: return "bool";
    case Sort::Real: return "real";
    case Sort::String: return "str";
  }
  return "?";
}

std::optional<Sort> sort_from_name(const std::string& name) {
  if (name == "unit") return Sort::Unit;
  if (name == "int") return Sort::Int;
  if (name == "bool") return Sort::Bool;
  if (name == "real") return Sort::Real;
  if (name == "str") return Sort::String;
  return std::nullopt;
}

bool sort_sub(Sort a, Sort b) {
  if (a == b) return true;
  return a == Sort::Int && b == Sort::Real;
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::size_t str_hash(const std::string& s) { return std::hash<std::string>{}(s); }

// Branch indices sorted by label; labels are distinct in well-formed types.
std::vector<std::size_t> label_order(const std::vector<Branch>& bs) {
  std::vector<std::size_t> idx(bs.size());
  for (std::size_t i = 0; i < bs.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return bs[a].label < bs[b].label; });
  return idx;
}

std::size_t compute_hash(const Type& t) {
  std::size_t h = static_cast<std::size_t>(t.kind) * 0x9e3779b9;
  switch (t.kind) {
    case TypeKind::End:
    case TypeKind::Stop:
      break;
    case TypeKind::Var:
      h = mix(h, static_cast<std::size_t>(t.var));
      break;
    case TypeKind::Rec:
      h = mix(h, type_hash(t.body));
      break;
    case TypeKind::Internal:
    case TypeKind::External: {
      h = mix(h, str_hash(t.peer));
      for (std::size_t i : label_order(t.branches)) {
        const Branch& b = t.branches[i];
        h = mix(h, str_hash(b.label));
        h = mix(h, payload_hash(b.payload));
        h = mix(h, type_hash(b.cont));
      }
      break;
    }
  }
  return h;
}

TypeRef make(Type&& t) {
  t.shash = compute_hash(t);
  return std::make_shared<const Type>(std::move(t));
}

}  // namespace

std::size_t payload_hash(const Payload& p) {
  if (p.is_session()) return mix(0x5e55, type_hash(p.session));
  return mix(0xba51c, static_cast<std::size_t>(p.sort));
}

bool payload_equal(const Payload& a, const Payload& b) { return payload_compare(a, b) == 0; }

int payload_compare(const Payload& a, const Payload& b) {
  if (a.is_session() != b.is_session()) return a.is_session() ? 1 : -1;
  if (a.is_session()) return type_compare(a.session, b.session);
  return static_cast<int>(a.sort) - static_cast<int>(b.sort);
}

TypeRef t_end() {
  static const TypeRef v = make(Type{.kind = TypeKind::End});
  return v;
}

TypeRef t_stop() {
  static const TypeRef v = make(Type{.kind = TypeKind::Stop});
  return v;
}

TypeRef t_var(int index, std::string hint) {
  return make(Type{.kind = TypeKind::Var, .var = index, .rec_hint = std::move(hint)});
}

TypeRef t_rec(TypeRef body, std::string hint) {
  return make(Type{.kind = TypeKind::Rec, .body = std::move(body), .rec_hint = std::move(hint)});
}

TypeRef t_internal(std::string peer, std::vector<Branch> branches) {
  return make(
      Type{.kind = TypeKind::Internal, .peer = std::move(peer), .branches = std::move(branches)});
}

TypeRef t_external(std::string peer, std::vector<Branch> branches) {
  return make(
      Type{.kind = TypeKind::External, .peer = std::move(peer), .branches = std::move(branches)});
}

int type_compare(const TypeRef& a, const TypeRef& b) {
  if (a.get() == b.get()) return 0;
  if (!a || !b) return a ? 1 : -1;
  if (a->kind != b->kind) return static_cast<int>(a->kind) - static_cast<int>(b->kind);
  switch (a->kind) {
    case TypeKind::End:
    case TypeKind::Stop:
      return 0;
    case TypeKind::Var:
      return a->var - b->var;
    case TypeKind::Rec:
      return type_compare(a->body, b->body);
    case TypeKind::Internal:
    case TypeKind::External: {
      if (int c = a->peer.compare(b->peer)) return c;
      auto ia = label_order(a->branches), ib = label_order(b->branches);
      if (ia.size() != ib.size()) return ia.size() < ib.size() ? -1 : 1;
      for (std::size_t k = 0; k < ia.size(); ++k) {
        const Branch& ba = a->branches[ia[k]];
        const Branch& bb = b->branches[ib[k]];
        if (int c = ba.label.compare(bb.label)) return c;
        if (int c = payload_compare(ba.payload, bb.payload)) return c;
        if (int c = type_compare(ba.cont, bb.cont)) return c;
      }
      return 0;
    }
  }
  return 0;
}

bool type_equal(const TypeRef& a, const TypeRef& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->shash != b->shash) return false;
  return type_compare(a, b) == 0;
}

std::string type_short(const TypeRef& t) {
  if (!t) return "<null>";
  switch (t->kind) {
    case TypeKind::End: return "end";
    case TypeKind::Stop: return "stop";
    case TypeKind::Var:
      return t->rec_hint.empty() ? "#" + std::to_string(t->var) : t->rec_hint;
    case TypeKind::Rec: {
      std::string n = t->rec_hint.empty() ? "t" : t->rec_hint;
      return "rec " + n + "." + type_short(t->body);
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      std::string out = t->peer;
      out += t->kind == TypeKind::Internal ? '!' : '?';
      out += '{';
      bool first = true;
      for (const Branch& b : t->branches) {
        if (!first) out += ", ";
        first = false;
        out += b.label;
        if (b.payload.is_session()) {
          out += '(' + type_short(b.payload.session) + ')';
        } else if (b.payload.sort != Sort::Unit) {
          out += '(';
          out += sort_name(b.payload.sort);
          out += ')';
        }
        out += '.';
        out += type_short(b.cont);
      }
      out += '}';
      return out;
    }
  }
  return "?";
}

namespace {

// depth = number of enclosing rec binders; top = true only for the entry root,
// the single position where stop is legal.
std::optional<std::string> wf(const TypeRef& t, int depth, bool top) {
  if (!t) return "null type node";
  switch (t->kind) {
    case TypeKind::End:
      return std::nullopt;
    case TypeKind::Stop:
      if (!top) return "stop may not occur inside a type";
      return std::nullopt;
    case TypeKind::Var:
      if (t->var < 0 || t->var >= depth) return "unbound recursion variable";
      return std::nullopt;
    case TypeKind::Rec: {
      // Guardedness: descending through nested rec heads must not hit a variable.
      TypeRef h = t->body;
      while (h && h->kind == TypeKind::Rec) h = h->body;
      if (h && h->kind == TypeKind::Var) return "unguarded recursion";
      return wf(t->body, depth + 1, false);
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      if (t->peer.empty()) return "choice without a peer role";
      if (t->branches.empty()) return "empty choice";
      std::unordered_set<std::string> seen;
      for (const Branch& b : t->branches) {
        if (!seen.insert(b.label).second) return "duplicate label " + b.label;
        if (b.label == kCrashLabel) {
          if (t->kind == TypeKind::Internal) return "crash in internal choice";
          if (b.payload.is_session() || b.payload.sort != Sort::Unit)
            return "crash branch carries a payload";
        }
        if (b.payload.is_session()) {
          if (auto e = wf(b.payload.session, 0, false)) return e;  // payloads are closed
        }
        if (auto e = wf(b.cont, depth, false)) return e;
      }
      return std::nullopt;
    }
  }
  return "unknown type node";
}

// Substitute `repl` (closed) for de Bruijn index `target` inside `t`.
TypeRef subst(const TypeRef& t, int target, const TypeRef& repl) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Stop:
      return t;
    case TypeKind::Var:
      return t->var == target ? repl : t;
    case TypeKind::Rec: {
      TypeRef body = subst(t->body, target + 1, repl);
      if (body.get() == t->body.get()) return t;
      return t_rec(std::move(body), t->rec_hint);
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      bool changed = false;
      std::vector<Branch> bs;
      bs.reserve(t->branches.size());
      for (const Branch& b : t->branches) {
        TypeRef c = subst(b.cont, target, repl);
        changed |= c.get() != b.cont.get();
        bs.push_back(Branch{b.label, b.payload, std::move(c)});
      }
      if (!changed) return t;
      return t->kind == TypeKind::Internal ? t_internal(t->peer, std::move(bs))
                                           : t_external(t->peer, std::move(bs));
    }
  }
  return t;
}

}  // namespace

std::optional<std::string> well_formed(const TypeRef& t) { return wf(t, 0, true); }

TypeRef unfold(const TypeRef& t) {
  if (!t || t->kind != TypeKind::Rec) return t;
  return subst(t->body, 0, t);
}

TypeRef full_unfold(const TypeRef& t) {
  TypeRef u = t;
  while (u && u->kind == TypeKind::Rec) u = unfold(u);
  return u;
}

bool sub_end(const TypeRef& t) {
  TypeRef u = full_unfold(t);
  return u && u->kind == TypeKind::End;
}

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<TypeRef, TypeRef>& p) const {
    return mix(type_hash(p.first), type_hash(p.second));
  }
};
struct PairEq {
  bool operator()(const std::pair<TypeRef, TypeRef>& a,
                  const std::pair<TypeRef, TypeRef>& b) const {
    return type_equal(a.first, b.first) && type_equal(a.second, b.second);
  }
};

using PairSet = std::unordered_set<std::pair<TypeRef, TypeRef>, PairHash, PairEq>;

bool pay_sub(const Payload& a, const Payload& b, PairSet& visited);

// a <= b coinductively. The visited set holds pre-unfolding pairs; a revisited
// pair is accepted (greatest fixpoint). Regular trees make the set finite.
bool sub(const TypeRef& a, const TypeRef& b, PairSet& visited) {
  if (type_equal(a, b)) return true;
  if (!visited.insert({a, b}).second) return true;
  TypeRef x = full_unfold(a);
  TypeRef y = full_unfold(b);
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case TypeKind::End:
    case TypeKind::Stop:
      return true;
    case TypeKind::Internal: {
      // Subtype may offer more send branches; payloads contravariant.
      if (x->peer != y->peer) return false;
      for (const Branch& sb : y->branches) {
        const Branch* xb = nullptr;
        for (const Branch& c : x->branches)
          if (c.label == sb.label) { xb = &c; break; }
        if (!xb) return false;
        if (!pay_sub(sb.payload, xb->payload, visited)) return false;
        if (!sub(xb->cont, sb.cont, visited)) return false;
      }
      return true;
    }
    case TypeKind::External: {
      // Supertype may offer more receive branches; payloads covariant.
      if (x->peer != y->peer) return false;
      // Pure crash recovery is protected: a singleton-crash subtype only has
      // singleton-crash supertypes.
      if (x->branches.size() == 1 && x->branches[0].label == kCrashLabel &&
          y->branches.size() != 1)
        return false;
      for (const Branch& xb : x->branches) {
        const Branch* yb = nullptr;
        for (const Branch& c : y->branches)
          if (c.label == xb.label) { yb = &c; break; }
        if (!yb) return false;
        if (!pay_sub(xb.payload, yb->payload, visited)) return false;
        if (!sub(xb.cont, yb->cont, visited)) return false;
      }
      return true;
    }
    case TypeKind::Var:
    case TypeKind::Rec:
      return false;  // unreachable on closed guarded types
  }
  return false;
}

bool pay_sub(const Payload& a, const Payload& b, PairSet& visited) {
  if (a.is_session() != b.is_session()) return false;
  if (a.is_session()) return sub(a.session, b.session, visited);
  return sort_sub(a.sort, b.sort);
}

}  // namespace

bool is_subtype(const TypeRef& a, const TypeRef& b) {
  PairSet visited;
  return sub(a, b, visited);
}

bool payload_sub(const Payload& a, const Payload& b) {
  PairSet visited;
  return pay_sub(a, b, visited);
}

}  // namespace mpst
