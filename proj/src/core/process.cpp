#include "process.hpp"

#include <algorithm>
#include <cassert>

#include "properties.hpp"
#include "statespace.hpp"

namespace mpst {

int value_compare(const Value& a, const Value& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  switch (a.kind) {
    case VKind::Unit: return 0;
    case VKind::Int: return a.ival < b.ival ? -1 : a.ival > b.ival ? 1 : 0;
    case VKind::Bool: return a.bval == b.bval ? 0 : (a.bval ? 1 : -1);
    case VKind::Real: return a.rval < b.rval ? -1 : a.rval > b.rval ? 1 : 0;
    case VKind::Str: return a.sval.compare(b.sval);
    case VKind::Var: return a.var.compare(b.var);
    case VKind::Chan: {
      if (a.chan == b.chan) return 0;
      return a.chan < b.chan ? -1 : 1;
    }
  }
  return 0;
}

bool value_equal(const Value& a, const Value& b) { return value_compare(a, b) == 0; }

Context RestrictionAnn::to_context(const std::string& session) const {
  Context g;
  for (const auto& [role, t] : roles) g.set({session, role}, t);
  return g;
}

namespace {
ProcRef mk(Process&& p) { return std::make_shared<const Process>(std::move(p)); }
}  // namespace

ProcRef p_inaction() {
  static const ProcRef v = mk(Process{});
  return v;
}
ProcRef p_error() {
  static const ProcRef v = mk(Process{.kind = PKind::Error});
  return v;
}
ProcRef p_parallel(ProcRef left, ProcRef right) {
  Process p;
  p.kind = PKind::Parallel;
  p.left = std::move(left);
  p.right = std::move(right);
  return mk(std::move(p));
}
ProcRef p_restriction(std::string session, RestrictionAnn ann, ProcRef body) {
  Process p;
  p.kind = PKind::Restriction;
  p.session = std::move(session);
  p.ann = std::move(ann);
  p.body = std::move(body);
  return mk(std::move(p));
}
ProcRef p_selection(Value chan, std::string to, std::string label, Value arg, ProcRef cont) {
  Process p;
  p.kind = PKind::Selection;
  p.chan = std::move(chan);
  p.role = std::move(to);
  p.label = std::move(label);
  p.arg = std::move(arg);
  p.cont = std::move(cont);
  return mk(std::move(p));
}
ProcRef p_branching(Value chan, std::string from, std::vector<ProcBranch> branches) {
  Process p;
  p.kind = PKind::Branching;
  p.chan = std::move(chan);
  p.role = std::move(from);
  p.branches = std::move(branches);
  return mk(std::move(p));
}
ProcRef p_def(std::string name, std::vector<std::pair<std::string, Payload>> params, ProcRef body,
              ProcRef scope) {
  Process p;
  p.kind = PKind::Def;
  p.name = std::move(name);
  p.params = std::move(params);
  p.body = std::move(body);
  p.cont = std::move(scope);
  return mk(std::move(p));
}
ProcRef p_call(std::string name, std::vector<Value> args) {
  Process p;
  p.kind = PKind::Call;
  p.name = std::move(name);
  p.args = std::move(args);
  return mk(std::move(p));
}
ProcRef p_crashed(std::string session, std::string role) {
  Process p;
  p.kind = PKind::Crashed;
  p.session = std::move(session);
  p.role = std::move(role);
  return mk(std::move(p));
}

namespace {

void collect_channels(const ProcRef& p, std::set<std::string> bound_sessions,
                      std::set<Endpoint>& out) {
  auto value = [&](const Value& v) {
    if (v.kind == VKind::Chan && !bound_sessions.count(v.chan.session)) out.insert(v.chan);
  };
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error: return;
    case PKind::Parallel:
      collect_channels(p->left, bound_sessions, out);
      collect_channels(p->right, bound_sessions, out);
      return;
    case PKind::Restriction: {
      auto inner = bound_sessions;
      inner.insert(p->session);
      collect_channels(p->body, std::move(inner), out);
      return;
    }
    case PKind::Selection:
      value(p->chan);
      value(p->arg);
      collect_channels(p->cont, bound_sessions, out);
      return;
    case PKind::Branching:
      value(p->chan);
      for (const ProcBranch& b : p->branches) collect_channels(b.cont, bound_sessions, out);
      return;
    case PKind::Def:
      collect_channels(p->body, bound_sessions, out);
      collect_channels(p->cont, bound_sessions, out);
      return;
    case PKind::Call:
      for (const Value& v : p->args) value(v);
      return;
    case PKind::Crashed:
      if (!bound_sessions.count(p->session)) out.insert({p->session, p->role});
      return;
  }
}

void collect_vars(const ProcRef& p, std::set<std::string> bound, std::set<std::string>& out) {
  auto value = [&](const Value& v) {
    if (v.kind == VKind::Var && !bound.count(v.var)) out.insert(v.var);
  };
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error:
    case PKind::Crashed: return;
    case PKind::Parallel:
      collect_vars(p->left, bound, out);
      collect_vars(p->right, bound, out);
      return;
    case PKind::Restriction: collect_vars(p->body, std::move(bound), out); return;
    case PKind::Selection:
      value(p->chan);
      value(p->arg);
      collect_vars(p->cont, bound, out);
      return;
    case PKind::Branching:
      value(p->chan);
      for (const ProcBranch& b : p->branches) {
        auto inner = bound;
        if (!b.var.empty()) inner.insert(b.var);
        collect_vars(b.cont, std::move(inner), out);
      }
      return;
    case PKind::Def: {
      auto inner = bound;
      for (const auto& [name, _] : p->params) inner.insert(name);
      collect_vars(p->body, std::move(inner), out);
      collect_vars(p->cont, bound, out);
      return;
    }
    case PKind::Call:
      for (const Value& v : p->args) value(v);
      return;
  }
}

void collect_session_names(const ProcRef& p, std::set<std::string>& out) {
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error: return;
    case PKind::Parallel:
      collect_session_names(p->left, out);
      collect_session_names(p->right, out);
      return;
    case PKind::Restriction:
      out.insert(p->session);
      collect_session_names(p->body, out);
      return;
    case PKind::Selection:
      if (p->chan.kind == VKind::Chan) out.insert(p->chan.chan.session);
      if (p->arg.kind == VKind::Chan) out.insert(p->arg.chan.session);
      collect_session_names(p->cont, out);
      return;
    case PKind::Branching:
      if (p->chan.kind == VKind::Chan) out.insert(p->chan.chan.session);
      for (const ProcBranch& b : p->branches) collect_session_names(b.cont, out);
      return;
    case PKind::Def:
      collect_session_names(p->body, out);
      collect_session_names(p->cont, out);
      return;
    case PKind::Call:
      for (const Value& v : p->args)
        if (v.kind == VKind::Chan) out.insert(v.chan.session);
      return;
    case PKind::Crashed: out.insert(p->session); return;
  }
}

void collect_call_names(const ProcRef& p, std::set<std::string> bound, std::set<std::string>& out) {
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error:
    case PKind::Crashed: return;
    case PKind::Parallel:
      collect_call_names(p->left, bound, out);
      collect_call_names(p->right, bound, out);
      return;
    case PKind::Restriction: collect_call_names(p->body, std::move(bound), out); return;
    case PKind::Selection: collect_call_names(p->cont, std::move(bound), out); return;
    case PKind::Branching:
      for (const ProcBranch& b : p->branches) collect_call_names(b.cont, bound, out);
      return;
    case PKind::Def: {
      auto inner = bound;
      inner.insert(p->name);
      collect_call_names(p->body, inner, out);
      collect_call_names(p->cont, std::move(inner), out);
      return;
    }
    case PKind::Call:
      if (!bound.count(p->name)) out.insert(p->name);
      return;
  }
}

std::set<std::string> collect_def_names_all(const ProcRef& p) {
  std::set<std::string> out, calls;
  collect_call_names(p, {}, calls);
  out = std::move(calls);
  // Also include binder names, so fresh names avoid everything in sight.
  struct Walk {
    std::set<std::string>& out;
    void go(const ProcRef& q) {
      switch (q->kind) {
        case PKind::Parallel: go(q->left); go(q->right); return;
        case PKind::Restriction: go(q->body); return;
        case PKind::Selection: go(q->cont); return;
        case PKind::Branching:
          for (const ProcBranch& b : q->branches) go(b.cont);
          return;
        case PKind::Def:
          out.insert(q->name);
          go(q->body);
          go(q->cont);
          return;
        default: return;
      }
    }
  } w{out};
  w.go(p);
  return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + "_" + std::to_string(k);
    if (!taken.count(cand)) return cand;
  }
}

ProcRef rename_session(const ProcRef& p, const std::string& from, const std::string& to) {
  auto value = [&](Value v) {
    if (v.kind == VKind::Chan && v.chan.session == from) v.chan.session = to;
    return v;
  };
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error: return p;
    case PKind::Parallel:
      return p_parallel(rename_session(p->left, from, to), rename_session(p->right, from, to));
    case PKind::Restriction:
      if (p->session == from) return p;  // shadowed
      return p_restriction(p->session, p->ann, rename_session(p->body, from, to));
    case PKind::Selection:
      return p_selection(value(p->chan), p->role, p->label, value(p->arg),
                         rename_session(p->cont, from, to));
    case PKind::Branching: {
      std::vector<ProcBranch> bs;
      for (const ProcBranch& b : p->branches)
        bs.push_back({b.label, b.var, rename_session(b.cont, from, to)});
      return p_branching(value(p->chan), p->role, std::move(bs));
    }
    case PKind::Def:
      return p_def(p->name, p->params, rename_session(p->body, from, to),
                   rename_session(p->cont, from, to));
    case PKind::Call: {
      std::vector<Value> args;
      for (const Value& v : p->args) args.push_back(value(v));
      return p_call(p->name, std::move(args));
    }
    case PKind::Crashed:
      if (p->session == from) return p_crashed(to, p->role);
      return p;
  }
  return p;
}

ProcRef rename_def(const ProcRef& p, const std::string& from, const std::string& to) {
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error:
    case PKind::Crashed: return p;
    case PKind::Parallel:
      return p_parallel(rename_def(p->left, from, to), rename_def(p->right, from, to));
    case PKind::Restriction:
      return p_restriction(p->session, p->ann, rename_def(p->body, from, to));
    case PKind::Selection:
      return p_selection(p->chan, p->role, p->label, p->arg, rename_def(p->cont, from, to));
    case PKind::Branching: {
      std::vector<ProcBranch> bs;
      for (const ProcBranch& b : p->branches)
        bs.push_back({b.label, b.var, rename_def(b.cont, from, to)});
      return p_branching(p->chan, p->role, std::move(bs));
    }
    case PKind::Def:
      if (p->name == from) return p;  // shadowed in both body and scope
      return p_def(p->name, p->params, rename_def(p->body, from, to),
                   rename_def(p->cont, from, to));
    case PKind::Call:
      if (p->name == from) return p_call(to, p->args);
      return p;
  }
  return p;
}

ProcRef subst(const ProcRef& p, const std::map<std::string, Value>& m) {
  if (m.empty()) return p;
  auto value = [&](const Value& v) {
    if (v.kind == VKind::Var) {
      auto it = m.find(v.var);
      if (it != m.end()) return it->second;
    }
    return v;
  };
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error:
    case PKind::Crashed: return p;
    case PKind::Parallel: return p_parallel(subst(p->left, m), subst(p->right, m));
    case PKind::Restriction: {
      bool captures = false;
      for (const auto& [_, v] : m)
        if (v.kind == VKind::Chan && v.chan.session == p->session) captures = true;
      if (!captures) return p_restriction(p->session, p->ann, subst(p->body, m));
      std::set<std::string> taken;
      collect_session_names(p->body, taken);
      taken.insert(p->session);
      for (const auto& [_, v] : m)
        if (v.kind == VKind::Chan) taken.insert(v.chan.session);
      std::string s2 = fresh_name(p->session, taken);
      return p_restriction(s2, p->ann, subst(rename_session(p->body, p->session, s2), m));
    }
    case PKind::Selection:
      return p_selection(value(p->chan), p->role, p->label, value(p->arg), subst(p->cont, m));
    case PKind::Branching: {
      std::vector<ProcBranch> bs;
      for (const ProcBranch& b : p->branches) {
        if (!b.var.empty() && m.count(b.var)) {
          auto m2 = m;
          m2.erase(b.var);
          bs.push_back({b.label, b.var, subst(b.cont, m2)});
        } else {
          bs.push_back({b.label, b.var, subst(b.cont, m)});
        }
      }
      return p_branching(value(p->chan), p->role, std::move(bs));
    }
    case PKind::Def: {
      auto m2 = m;
      for (const auto& [name, _] : p->params) m2.erase(name);
      return p_def(p->name, p->params, subst(p->body, m2), subst(p->cont, m));
    }
    case PKind::Call: {
      std::vector<Value> args;
      for (const Value& v : p->args) args.push_back(value(v));
      return p_call(p->name, std::move(args));
    }
  }
  return p;
}

// Comparison environment: one per side, mapping bound names to binder indices.
struct CmpEnv {
  std::map<std::string, int> vars, sessions, defs;
  int nv = 0, ns = 0, nd = 0;
};

int name_compare(const std::map<std::string, int>& ea, const std::map<std::string, int>& eb,
                 const std::string& a, const std::string& b) {
  auto ia = ea.find(a);
  auto ib = eb.find(b);
  bool ba = ia != ea.end(), bb = ib != eb.end();
  if (ba != bb) return ba ? -1 : 1;
  if (ba) return ia->second < ib->second ? -1 : ia->second > ib->second ? 1 : 0;
  return a.compare(b);
}

int value_compare_env(const CmpEnv& ea, const CmpEnv& eb, const Value& a, const Value& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (a.kind == VKind::Var) return name_compare(ea.vars, eb.vars, a.var, b.var);
  if (a.kind == VKind::Chan) {
    int c = name_compare(ea.sessions, eb.sessions, a.chan.session, b.chan.session);
    if (c) return c;
    return a.chan.role.compare(b.chan.role);
  }
  return value_compare(a, b);
}

int ann_compare(const RestrictionAnn& a, const RestrictionAnn& b) {
  if (a.reliable != b.reliable)
    return a.reliable < b.reliable ? -1 : 1;
  if (a.roles.size() != b.roles.size()) return a.roles.size() < b.roles.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.roles.size(); ++i) {
    int c = a.roles[i].first.compare(b.roles[i].first);
    if (c) return c;
    c = type_compare(a.roles[i].second, b.roles[i].second);
    if (c) return c;
  }
  return 0;
}

int payload_decl_compare(const Payload& a, const Payload& b) { return payload_compare(a, b); }

int cmp(const ProcRef& a, const ProcRef& b, CmpEnv ea, CmpEnv eb) {
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case PKind::Inaction:
    case PKind::Error: return 0;
    case PKind::Parallel: {
      int c = cmp(a->left, b->left, ea, eb);
      if (c) return c;
      return cmp(a->right, b->right, ea, eb);
    }
    case PKind::Restriction: {
      int c = ann_compare(a->ann, b->ann);
      if (c) return c;
      ea.sessions[a->session] = ea.ns++;
      eb.sessions[b->session] = eb.ns++;
      return cmp(a->body, b->body, std::move(ea), std::move(eb));
    }
    case PKind::Selection: {
      int c = value_compare_env(ea, eb, a->chan, b->chan);
      if (c) return c;
      c = a->role.compare(b->role);
      if (c) return c;
      c = a->label.compare(b->label);
      if (c) return c;
      c = value_compare_env(ea, eb, a->arg, b->arg);
      if (c) return c;
      return cmp(a->cont, b->cont, std::move(ea), std::move(eb));
    }
    case PKind::Branching: {
      int c = value_compare_env(ea, eb, a->chan, b->chan);
      if (c) return c;
      c = a->role.compare(b->role);
      if (c) return c;
      if (a->branches.size() != b->branches.size())
        return a->branches.size() < b->branches.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->branches.size(); ++i) {
        const ProcBranch& x = a->branches[i];
        const ProcBranch& y = b->branches[i];
        c = x.label.compare(y.label);
        if (c) return c;
        CmpEnv ea2 = ea, eb2 = eb;
        if (!x.var.empty()) ea2.vars[x.var] = ea2.nv++;
        if (!y.var.empty()) eb2.vars[y.var] = eb2.nv++;
        c = cmp(x.cont, y.cont, std::move(ea2), std::move(eb2));
        if (c) return c;
      }
      return 0;
    }
    case PKind::Def: {
      if (a->params.size() != b->params.size())
        return a->params.size() < b->params.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->params.size(); ++i) {
        int c = payload_decl_compare(a->params[i].second, b->params[i].second);
        if (c) return c;
      }
      CmpEnv ba = ea, bb = eb;
      ba.defs[a->name] = ba.nd++;
      bb.defs[b->name] = bb.nd++;
      CmpEnv ia = ba, ib = bb;
      for (const auto& [n, _] : a->params) ia.vars[n] = ia.nv++;
      for (const auto& [n, _] : b->params) ib.vars[n] = ib.nv++;
      int c = cmp(a->body, b->body, std::move(ia), std::move(ib));
      if (c) return c;
      return cmp(a->cont, b->cont, std::move(ba), std::move(bb));
    }
    case PKind::Call: {
      int c = name_compare(ea.defs, eb.defs, a->name, b->name);
      if (c) return c;
      if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        c = value_compare_env(ea, eb, a->args[i], b->args[i]);
        if (c) return c;
      }
      return 0;
    }
    case PKind::Crashed: {
      int c = name_compare(ea.sessions, eb.sessions, a->session, b->session);
      if (c) return c;
      return a->role.compare(b->role);
    }
  }
  return 0;
}

}  // namespace

std::set<Endpoint> free_channels(const ProcRef& p) {
  std::set<Endpoint> out;
  collect_channels(p, {}, out);
  return out;
}

std::set<std::string> free_vars(const ProcRef& p) {
  std::set<std::string> out;
  collect_vars(p, {}, out);
  return out;
}

int proc_compare(const ProcRef& a, const ProcRef& b) { return cmp(a, b, {}, {}); }
bool proc_equal(const ProcRef& a, const ProcRef& b) { return proc_compare(a, b) == 0; }

namespace {

struct ResBinder {
  std::string session;
  RestrictionAnn ann;
};
struct DefBinder {
  std::string name;
  std::vector<std::pair<std::string, Payload>> params;
  ProcRef body;
};
struct NF {
  std::vector<ResBinder> res;
  std::vector<DefBinder> defs;
  std::vector<ProcRef> atoms;
};

std::set<std::string> nf_free_sessions(const NF& nf) {
  std::set<std::string> out;
  for (const ProcRef& a : nf.atoms)
    for (const Endpoint& e : free_channels(a)) out.insert(e.session);
  for (const DefBinder& d : nf.defs)
    for (const Endpoint& e : free_channels(d.body)) out.insert(e.session);
  for (const ResBinder& r : nf.res) out.erase(r.session);
  return out;
}

std::set<std::string> nf_all_sessions(const NF& nf) {
  std::set<std::string> out;
  for (const ProcRef& a : nf.atoms) collect_session_names(a, out);
  for (const DefBinder& d : nf.defs) collect_session_names(d.body, out);
  for (const ResBinder& r : nf.res) out.insert(r.session);
  return out;
}

std::set<std::string> nf_free_calls(const NF& nf) {
  std::set<std::string> out;
  for (const ProcRef& a : nf.atoms) collect_call_names(a, {}, out);
  for (const DefBinder& d : nf.defs) collect_call_names(d.body, {}, out);
  for (const DefBinder& d : nf.defs) out.erase(d.name);
  return out;
}

std::set<std::string> nf_all_defnames(const NF& nf) {
  std::set<std::string> out;
  for (const ProcRef& a : nf.atoms) {
    auto s = collect_def_names_all(a);
    out.insert(s.begin(), s.end());
  }
  for (const DefBinder& d : nf.defs) {
    auto s = collect_def_names_all(d.body);
    out.insert(s.begin(), s.end());
    out.insert(d.name);
  }
  return out;
}

void nf_rename_session(NF& nf, std::size_t res_index, const std::string& to) {
  const std::string from = nf.res[res_index].session;
  nf.res[res_index].session = to;
  for (ProcRef& a : nf.atoms) a = rename_session(a, from, to);
  for (DefBinder& d : nf.defs) d.body = rename_session(d.body, from, to);
}

void nf_rename_def(NF& nf, std::size_t def_index, const std::string& to) {
  const std::string from = nf.defs[def_index].name;
  nf.defs[def_index].name = to;
  for (ProcRef& a : nf.atoms) a = rename_def(a, from, to);
  for (DefBinder& d : nf.defs) d.body = rename_def(d.body, from, to);
}

NF merge(NF a, NF b) {
  std::set<std::string> taken = nf_all_sessions(a);
  {
    auto tb = nf_all_sessions(b);
    taken.insert(tb.begin(), tb.end());
  }
  std::set<std::string> free_a = nf_free_sessions(a);
  std::set<std::string> free_b = nf_free_sessions(b);
  for (std::size_t i = 0; i < a.res.size(); ++i)
    if (free_b.count(a.res[i].session)) {
      std::string s2 = fresh_name(a.res[i].session, taken);
      taken.insert(s2);
      nf_rename_session(a, i, s2);
    }
  for (std::size_t i = 0; i < b.res.size(); ++i) {
    bool clash = free_a.count(b.res[i].session) > 0;
    for (const ResBinder& r : a.res)
      if (r.session == b.res[i].session) clash = true;
    if (clash) {
      std::string s2 = fresh_name(b.res[i].session, taken);
      taken.insert(s2);
      nf_rename_session(b, i, s2);
    }
  }

  std::set<std::string> dtaken = nf_all_defnames(a);
  {
    auto db = nf_all_defnames(b);
    dtaken.insert(db.begin(), db.end());
  }
  std::set<std::string> calls_a = nf_free_calls(a);
  std::set<std::string> calls_b = nf_free_calls(b);
  for (std::size_t i = 0; i < a.defs.size(); ++i)
    if (calls_b.count(a.defs[i].name)) {
      std::string n2 = fresh_name(a.defs[i].name, dtaken);
      dtaken.insert(n2);
      nf_rename_def(a, i, n2);
    }
  for (std::size_t i = 0; i < b.defs.size(); ++i) {
    bool clash = calls_a.count(b.defs[i].name) > 0;
    for (const DefBinder& d : a.defs)
      if (d.name == b.defs[i].name) clash = true;
    if (clash) {
      std::string n2 = fresh_name(b.defs[i].name, dtaken);
      dtaken.insert(n2);
      nf_rename_def(b, i, n2);
    }
  }

  NF out = std::move(a);
  out.res.insert(out.res.end(), std::make_move_iterator(b.res.begin()),
                 std::make_move_iterator(b.res.end()));
  out.defs.insert(out.defs.end(), std::make_move_iterator(b.defs.begin()),
                  std::make_move_iterator(b.defs.end()));
  out.atoms.insert(out.atoms.end(), std::make_move_iterator(b.atoms.begin()),
                   std::make_move_iterator(b.atoms.end()));
  return out;
}

ProcRef rebuild(NF nf);

NF norm(const ProcRef& p) {
  switch (p->kind) {
    case PKind::Inaction: return {};
    case PKind::Error:
    case PKind::Call:
    case PKind::Crashed: return {{}, {}, {p}};
    case PKind::Selection: {
      ProcRef cont = rebuild(norm(p->cont));
      return {{}, {}, {p_selection(p->chan, p->role, p->label, p->arg, std::move(cont))}};
    }
    case PKind::Branching: {
      std::vector<ProcBranch> bs;
      for (const ProcBranch& b : p->branches)
        bs.push_back({b.label, b.var, rebuild(norm(b.cont))});
      return {{}, {}, {p_branching(p->chan, p->role, std::move(bs))}};
    }
    case PKind::Parallel: return merge(norm(p->left), norm(p->right));
    case PKind::Restriction: {
      NF nf = norm(p->body);
      std::set<std::string> free = nf_free_sessions(nf);
      if (!free.count(p->session)) return nf;  // dead or shadowed binder
      bool def_mentions = false;
      for (const DefBinder& d : nf.defs)
        for (const Endpoint& e : free_channels(d.body))
          if (e.session == p->session) def_mentions = true;
      bool only_crashed = !def_mentions;
      for (const ProcRef& a : nf.atoms) {
        if (a->kind == PKind::Crashed && a->session == p->session) continue;
        for (const Endpoint& e : free_channels(a))
          if (e.session == p->session) only_crashed = false;
      }
      if (only_crashed) {
        // Fully-crashed session: drop the restriction and its remains.
        std::vector<ProcRef> atoms;
        for (ProcRef& a : nf.atoms)
          if (!(a->kind == PKind::Crashed && a->session == p->session))
            atoms.push_back(std::move(a));
        nf.atoms = std::move(atoms);
        return nf;
      }
      nf.res.insert(nf.res.begin(), ResBinder{p->session, p->ann});
      return nf;
    }
    case PKind::Def: {
      NF nf = norm(p->cont);
      for (const DefBinder& d : nf.defs)
        if (d.name == p->name) return nf;  // shadowed
      std::set<std::string> used;
      for (const ProcRef& a : nf.atoms) collect_call_names(a, {}, used);
      for (const DefBinder& d : nf.defs) collect_call_names(d.body, {}, used);
      if (!used.count(p->name)) return nf;  // unused definition
      ProcRef body = rebuild(norm(p->body));
      // The definition floats under the continuation's restrictions; any
      // binder clashing with a session free in the body must be freshened.
      std::set<std::string> body_free;
      for (const Endpoint& e : free_channels(body)) body_free.insert(e.session);
      if (!body_free.empty()) {
        std::set<std::string> taken = nf_all_sessions(nf);
        taken.insert(body_free.begin(), body_free.end());
        for (std::size_t i = 0; i < nf.res.size(); ++i)
          if (body_free.count(nf.res[i].session)) {
            std::string s2 = fresh_name(nf.res[i].session, taken);
            taken.insert(s2);
            nf_rename_session(nf, i, s2);
          }
      }
      nf.defs.insert(nf.defs.begin(), DefBinder{p->name, p->params, std::move(body)});
      return nf;
    }
  }
  return {};
}

ProcRef rebuild(NF nf) {
  std::sort(nf.res.begin(), nf.res.end(),
            [](const ResBinder& a, const ResBinder& b) { return a.session < b.session; });
  std::sort(nf.atoms.begin(), nf.atoms.end(),
            [](const ProcRef& a, const ProcRef& b) { return proc_compare(a, b) < 0; });
  ProcRef body;
  if (nf.atoms.empty()) {
    body = p_inaction();
  } else {
    body = nf.atoms[0];
    for (std::size_t i = 1; i < nf.atoms.size(); ++i) body = p_parallel(body, nf.atoms[i]);
  }
  for (std::size_t i = nf.defs.size(); i-- > 0;)
    body = p_def(nf.defs[i].name, nf.defs[i].params, nf.defs[i].body, body);
  for (std::size_t i = nf.res.size(); i-- > 0;)
    body = p_restriction(nf.res[i].session, nf.res[i].ann, body);
  return body;
}

}  // namespace

ProcRef congruence_normal(const ProcRef& p) { return rebuild(norm(p)); }

namespace {

std::vector<ProcSuccessor> step_impl(const ProcRef& p, bool crash_rules,
                                     const ReliableMap* filter) {
  NF nf = norm(p);
  std::map<std::string, const DefBinder*> defs;
  for (const DefBinder& d : nf.defs) defs[d.name] = &d;

  // Reliability per session: restricted sessions carry their own assumption,
  // free sessions take the caller's map, unknown sessions are unreliable.
  ReliableMap rel;
  if (filter) {
    rel = *filter;
    for (const ResBinder& r : nf.res)
      rel[r.session] = std::set<std::string>(r.ann.reliable.begin(), r.ann.reliable.end());
  }
  auto may_crash = [&](const Endpoint& e) {
    if (!filter) return true;
    auto it = rel.find(e.session);
    return it == rel.end() || !it->second.count(e.role);
  };

  std::vector<ProcSuccessor> out;
  auto emit = [&](const char* rule, std::vector<ProcRef> atoms) {
    NF copy;
    copy.res = nf.res;
    copy.defs = nf.defs;
    copy.atoms = std::move(atoms);
    ProcRef q = congruence_normal(rebuild(std::move(copy)));
    for (const ProcSuccessor& s : out)
      if (s.rule == rule && proc_equal(s.process, q)) return;
    out.push_back({rule, std::move(q)});
  };
  auto atoms_with = [&](std::size_t i, ProcRef repl) {
    std::vector<ProcRef> atoms = nf.atoms;
    atoms[i] = std::move(repl);
    return atoms;
  };

  for (std::size_t i = 0; i < nf.atoms.size(); ++i) {
    const ProcRef& a = nf.atoms[i];
    if (a->kind == PKind::Selection && a->chan.kind == VKind::Chan) {
      const std::string& s = a->chan.chan.session;
      const std::string& from = a->chan.chan.role;
      const std::string& to = a->role;
      for (std::size_t j = 0; j < nf.atoms.size(); ++j) {
        if (j == i) continue;
        const ProcRef& b = nf.atoms[j];
        if (b->kind == PKind::Branching && b->chan.kind == VKind::Chan &&
            b->chan.chan.session == s && b->chan.chan.role == to && b->role == from) {
          const ProcBranch* hit = nullptr;
          for (const ProcBranch& br : b->branches)
            if (br.label == a->label) hit = &br;
          if (hit) {
            std::vector<ProcRef> atoms = nf.atoms;
            atoms[i] = a->cont;
            atoms[j] = hit->var.empty() ? hit->cont : subst(hit->cont, {{hit->var, a->arg}});
            emit("comm", std::move(atoms));
          } else {
            std::vector<ProcRef> atoms;
            for (std::size_t k = 0; k < nf.atoms.size(); ++k)
              if (k != i && k != j) atoms.push_back(nf.atoms[k]);
            atoms.push_back(p_error());
            emit("err-label", std::move(atoms));
          }
        }
        if (crash_rules && b->kind == PKind::Crashed && b->session == s && b->role == to) {
          if (a->arg.kind == VKind::Chan) {
            if (may_crash(a->arg.chan)) {
              std::vector<ProcRef> atoms = atoms_with(i, a->cont);
              atoms.push_back(p_crashed(a->arg.chan.session, a->arg.chan.role));
              emit("lost-chan", std::move(atoms));
            }
          } else {
            emit("lost-ground", atoms_with(i, a->cont));
          }
        }
      }
    }
    if (crash_rules && a->kind == PKind::Branching && a->chan.kind == VKind::Chan) {
      const ProcBranch* crash_arm = nullptr;
      for (const ProcBranch& br : a->branches)
        if (br.label == kCrashLabel) crash_arm = &br;
      if (crash_arm) {
        for (std::size_t j = 0; j < nf.atoms.size(); ++j) {
          const ProcRef& b = nf.atoms[j];
          if (j != i && b->kind == PKind::Crashed && b->session == a->chan.chan.session &&
              b->role == a->role) {
            emit("detect", atoms_with(i, crash_arm->cont));
            break;
          }
        }
      }
    }
    if (a->kind == PKind::Call) {
      auto it = defs.find(a->name);
      if (it != defs.end() && it->second->params.size() == a->args.size()) {
        std::map<std::string, Value> m;
        for (std::size_t k = 0; k < a->args.size(); ++k)
          m[it->second->params[k].first] = a->args[k];
        emit("call", atoms_with(i, subst(it->second->body, m)));
      }
    }
    if (crash_rules &&
        (a->kind == PKind::Selection || a->kind == PKind::Branching) &&
        a->chan.kind == VKind::Chan) {
      std::set<Endpoint> dying = free_channels(a);
      bool allowed = true;
      for (const Endpoint& e : dying)
        if (!may_crash(e)) allowed = false;
      if (allowed) {
        std::vector<ProcRef> atoms;
        for (std::size_t k = 0; k < nf.atoms.size(); ++k)
          if (k != i) atoms.push_back(nf.atoms[k]);
        for (const Endpoint& e : dying) atoms.push_back(p_crashed(e.session, e.role));
        emit(a->kind == PKind::Selection ? "crash-sel" : "crash-bra", std::move(atoms));
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const ProcSuccessor& x, const ProcSuccessor& y) {
    if (x.rule != y.rule) return x.rule < y.rule;
    return proc_compare(x.process, y.process) < 0;
  });
  return out;
}

}  // namespace

std::vector<ProcSuccessor> step(const ProcRef& p, bool crash_injection) {
  return step_impl(p, crash_injection, nullptr);
}

std::vector<ProcSuccessor> filtered_step(const ProcRef& p, const ReliableMap& reliable) {
  return step_impl(p, true, &reliable);
}

bool has_error(const ProcRef& p) {
  switch (p->kind) {
    case PKind::Error: return true;
    case PKind::Parallel: return has_error(p->left) || has_error(p->right);
    case PKind::Restriction: return has_error(p->body);
    case PKind::Def: return has_error(p->cont);
    default: return false;
  }
}

namespace {

bool spine_has_bare_call(const ProcRef& p) {
  switch (p->kind) {
    case PKind::Call: return true;
    case PKind::Parallel: return spine_has_bare_call(p->left) || spine_has_bare_call(p->right);
    case PKind::Restriction: return spine_has_bare_call(p->body);
    case PKind::Def: return spine_has_bare_call(p->cont);
    default: return false;
  }
}

}  // namespace

bool defs_guarded(const ProcRef& p) {
  switch (p->kind) {
    case PKind::Inaction:
    case PKind::Error:
    case PKind::Call:
    case PKind::Crashed: return true;
    case PKind::Parallel: return defs_guarded(p->left) && defs_guarded(p->right);
    case PKind::Restriction: return defs_guarded(p->body);
    case PKind::Selection: return defs_guarded(p->cont);
    case PKind::Branching:
      for (const ProcBranch& b : p->branches)
        if (!defs_guarded(b.cont)) return false;
      return true;
    case PKind::Def:
      return !spine_has_bare_call(p->body) && defs_guarded(p->body) && defs_guarded(p->cont);
  }
  return true;
}

void ProcContext::add_var(std::string name, Payload t) {
  entries.push_back({true, std::move(name), {}, std::move(t)});
}
void ProcContext::add_chan(Endpoint ep, Payload t) {
  entries.push_back({false, {}, std::move(ep), std::move(t)});
}
const ProcEntry* ProcContext::find_var(const std::string& name) const {
  for (const ProcEntry& e : entries)
    if (e.is_var && e.var == name) return &e;
  return nullptr;
}
const ProcEntry* ProcContext::find_chan(const Endpoint& ep) const {
  for (const ProcEntry& e : entries)
    if (!e.is_var && e.ep == ep) return &e;
  return nullptr;
}

namespace {

std::string entry_name(const ProcEntry& e) {
  return e.is_var ? e.var : e.ep.session + "[" + e.ep.role + "]";
}

std::string payload_show(const Payload& t) {
  return t.is_session() ? type_short(t.session) : sort_name(t.sort);
}

bool entry_endable(const Payload& t) { return !t.is_session() || sub_end(t.session); }

struct Typer {
  std::optional<std::string> check(DefSigs theta, ProcContext g, const ProcRef& p) {
    switch (p->kind) {
      case PKind::Inaction: return require_end(g, "leftover at inaction");
      case PKind::Error: return std::string("the error process is not typable");
      case PKind::Crashed: {
        Endpoint ep{p->session, p->role};
        int idx = find(g, ep);
        if (idx < 0)
          return "crashed endpoint " + ep.session + "[" + ep.role + "] not in the context";
        const Payload& t = g.entries[static_cast<std::size_t>(idx)].type;
        if (!t.is_session() || t.session->kind != TypeKind::Stop)
          return "crashed endpoint " + ep.session + "[" + ep.role + "] must be typed stop, not " +
                 payload_show(t);
        g.entries.erase(g.entries.begin() + idx);
        return require_end(g, "leftover beside a crashed endpoint");
      }
      case PKind::Parallel: return check_parallel(std::move(theta), std::move(g), p);
      case PKind::Selection: return check_selection(std::move(theta), std::move(g), p);
      case PKind::Branching: return check_branching(std::move(theta), std::move(g), p);
      case PKind::Def: {
        std::set<std::string> seen;
        ProcContext body_ctx;
        for (const auto& [name, t] : p->params) {
          if (!seen.insert(name).second)
            return "definition " + p->name + " repeats parameter " + name;
          body_ctx.add_var(name, t);
        }
        DefSigs theta2 = theta;
        std::vector<Payload> sig;
        for (const auto& [_, t] : p->params) sig.push_back(t);
        theta2[p->name] = std::move(sig);
        if (auto e = check(theta2, std::move(body_ctx), p->body))
          return "definition " + p->name + ": " + *e;
        return check(std::move(theta2), std::move(g), p->cont);
      }
      case PKind::Call: return check_call(std::move(theta), std::move(g), p);
      case PKind::Restriction: return check_restriction(std::move(theta), std::move(g), p);
    }
    return std::string("unreachable");
  }

  static int find(const ProcContext& g, const Endpoint& ep) {
    for (std::size_t i = 0; i < g.entries.size(); ++i)
      if (!g.entries[i].is_var && g.entries[i].ep == ep) return static_cast<int>(i);
    return -1;
  }
  static int find(const ProcContext& g, const std::string& var) {
    for (std::size_t i = 0; i < g.entries.size(); ++i)
      if (g.entries[i].is_var && g.entries[i].var == var) return static_cast<int>(i);
    return -1;
  }
  static int find_value(const ProcContext& g, const Value& v) {
    if (v.kind == VKind::Var) return find(g, v.var);
    if (v.kind == VKind::Chan) return find(g, v.chan);
    return -1;
  }

  static std::optional<std::string> require_end(const ProcContext& g, const char* where) {
    for (const ProcEntry& e : g.entries)
      if (!entry_endable(e.type))
        return std::string(where) + ": " + entry_name(e) + " : " + payload_show(e.type) +
               " is not terminated";
    return std::nullopt;
  }

  std::optional<std::string> check_parallel(DefSigs theta, ProcContext g, const ProcRef& p) {
    auto fvl = free_vars(p->left);
    auto fcl = free_channels(p->left);
    auto fvr = free_vars(p->right);
    auto fcr = free_channels(p->right);
    ProcContext gl, gr;
    for (ProcEntry& e : g.entries) {
      bool inl = e.is_var ? fvl.count(e.var) > 0 : fcl.count(e.ep) > 0;
      bool inr = e.is_var ? fvr.count(e.var) > 0 : fcr.count(e.ep) > 0;
      if (inl && inr)
        return "linear entry " + entry_name(e) + " is used on both sides of a parallel";
      (inr ? gr : gl).entries.push_back(std::move(e));
    }
    if (auto e = check(theta, std::move(gl), p->left)) return e;
    return check(std::move(theta), std::move(gr), p->right);
  }

  std::optional<std::string> check_selection(DefSigs theta, ProcContext g, const ProcRef& p) {
    int ci = find_value(g, p->chan);
    if (ci < 0) return "selection subject is not a linear channel in the context";
    Payload ct = g.entries[static_cast<std::size_t>(ci)].type;
    if (!ct.is_session()) return "selection subject has basic type " + payload_show(ct);
    TypeRef w = full_unfold(ct.session);
    if (w->kind != TypeKind::Internal)
      return "selection on a channel typed " + type_short(ct.session) +
             ", which does not permit sending";
    if (w->peer != p->role)
      return "selection addresses " + p->role + " but the type talks to " + w->peer;
    if (p->label == kCrashLabel) return std::string("the crash label cannot be selected");
    const Branch* arm = nullptr;
    for (const Branch& b : w->branches)
      if (b.label == p->label) arm = &b;
    if (!arm) return "label " + p->label + " is not offered by " + type_short(ct.session);

    ProcContext g2 = g;
    const Value& d = p->arg;
    if (d.kind == VKind::Var || d.kind == VKind::Chan) {
      int di = find_value(g2, d);
      if (di < 0) return "payload of " + p->label + " is not in the context";
      if (di == ci) return std::string("a channel cannot send itself");
      Payload dt = g2.entries[static_cast<std::size_t>(di)].type;
      if (auto e = check_payload(dt, arm->payload, p->label)) return e;
      g2.entries.erase(g2.entries.begin() + di);
      if (di < ci) --ci;
    } else {
      Payload dt = literal_type(d);
      if (auto e = check_payload(dt, arm->payload, p->label)) return e;
    }
    g2.entries[static_cast<std::size_t>(ci)].type = Payload{Sort::Unit, arm->cont};
    return check(std::move(theta), std::move(g2), p->cont);
  }

  static Payload literal_type(const Value& v) {
    switch (v.kind) {
      case VKind::Unit: return {Sort::Unit, nullptr};
      case VKind::Int: return {Sort::Int, nullptr};
      case VKind::Bool: return {Sort::Bool, nullptr};
      case VKind::Real: return {Sort::Real, nullptr};
      case VKind::Str: return {Sort::String, nullptr};
      default: return {Sort::Unit, nullptr};
    }
  }

  static std::optional<std::string> check_payload(const Payload& have, const Payload& want,
                                                  const std::string& label) {
    if (want.is_session()) {
      if (!have.is_session())
        return "label " + label + " carries a session payload, got " + payload_show(have);
      if (sub_end(have.session))
        return "label " + label + ": a terminated channel cannot be sent";
      if (!is_subtype(have.session, want.session))
        return "label " + label + ": payload type " + payload_show(have) +
               " is not a subtype of " + payload_show(want);
      return std::nullopt;
    }
    if (have.is_session())
      return "label " + label + " carries a basic payload, got a channel";
    if (!sort_sub(have.sort, want.sort))
      return "label " + label + ": " + payload_show(have) + " does not fit " + payload_show(want);
    return std::nullopt;
  }

  std::optional<std::string> check_branching(DefSigs theta, ProcContext g, const ProcRef& p) {
    int ci = find_value(g, p->chan);
    if (ci < 0) return "branching subject is not a linear channel in the context";
    Payload ct = g.entries[static_cast<std::size_t>(ci)].type;
    if (!ct.is_session()) return "branching subject has basic type " + payload_show(ct);
    TypeRef w = full_unfold(ct.session);
    if (w->kind != TypeKind::External)
      return "branching on a channel typed " + type_short(ct.session) +
             ", which does not permit receiving";
    if (w->peer != p->role)
      return "branching expects " + p->role + " but the type listens to " + w->peer;

    std::set<std::string> plabels, tlabels;
    for (const ProcBranch& b : p->branches)
      if (!plabels.insert(b.label).second) return "duplicate branch label " + b.label;
    for (const Branch& b : w->branches) tlabels.insert(b.label);
    if (plabels != tlabels) {
      std::string msg = "branch labels {";
      bool first = true;
      for (const auto& l : plabels) {
        msg += (first ? "" : ",") + l;
        first = false;
      }
      msg += "} do not match the type's {";
      first = true;
      for (const auto& l : tlabels) {
        msg += (first ? "" : ",") + l;
        first = false;
      }
      return msg + "}";
    }
    for (const ProcBranch& pb : p->branches) {
      const Branch* arm = nullptr;
      for (const Branch& b : w->branches)
        if (b.label == pb.label) arm = &b;
      ProcContext g2 = g;
      g2.entries[static_cast<std::size_t>(ci)].type = Payload{Sort::Unit, arm->cont};
      if (pb.label == kCrashLabel) {
        if (!pb.var.empty()) return std::string("the crash branch binds no payload");
      } else {
        if (pb.var.empty()) return "branch " + pb.label + " must bind its payload";
        if (find(g2, pb.var) >= 0)
          return "branch " + pb.label + " shadows the linear variable " + pb.var;
        g2.add_var(pb.var, arm->payload);
      }
      if (auto e = check(theta, std::move(g2), pb.cont))
        return "branch " + pb.label + ": " + *e;
    }
    return std::nullopt;
  }

  std::optional<std::string> check_call(DefSigs theta, ProcContext g, const ProcRef& p) {
    auto it = theta.find(p->name);
    if (it == theta.end()) return "call to unknown definition " + p->name;
    if (it->second.size() != p->args.size())
      return "call to " + p->name + " passes " + std::to_string(p->args.size()) +
             " arguments, expected " + std::to_string(it->second.size());
    for (std::size_t i = 0; i < p->args.size(); ++i) {
      const Value& v = p->args[i];
      const Payload& want = it->second[i];
      if (v.kind == VKind::Var || v.kind == VKind::Chan) {
        int vi = find_value(g, v);
        if (vi < 0)
          return "argument " + std::to_string(i + 1) + " of " + p->name +
                 " is not in the context";
        Payload have = g.entries[static_cast<std::size_t>(vi)].type;
        if (auto e = check_payload(have, want, p->name)) return e;
        g.entries.erase(g.entries.begin() + vi);
      } else {
        if (auto e = check_payload(literal_type(v), want, p->name)) return e;
      }
    }
    return require_end(g, "leftover at a call");
  }

  std::optional<std::string> check_restriction(DefSigs theta, ProcContext g, const ProcRef& p) {
    for (const ProcEntry& e : g.entries)
      if (!e.is_var && e.ep.session == p->session)
        return "session " + p->session + " is already bound in the context";
    std::set<std::string> roles;
    for (const auto& [role, t] : p->ann.roles) {
      if (!roles.insert(role).second)
        return "restriction " + p->session + " repeats role " + role;
      if (auto e = well_formed(t))
        return "restriction " + p->session + "[" + role + "]: " + *e;
    }
    for (const std::string& r : p->ann.reliable)
      if (!roles.count(r))
        return "restriction " + p->session + ": reliable role " + r + " has no entry";

    Context g0 = p->ann.to_context(p->session);
    auto built = build_lts(g0, p->session, p->ann.reliable, LtsLimits{100000, 0});
    if (std::holds_alternative<LimitExceeded>(built))
      return "restriction " + p->session + ": annotation state space exceeds the bound";
    const Lts& lts = std::get<Lts>(built);
    Verdict safe = check_safety(lts);
    if (!safe.holds)
      return "restriction " + p->session + ": annotation is not safe: " +
             (safe.witness.empty() ? std::string() : safe.witness.back());

    // The annotation may describe any reachable stage of the protocol: search
    // the reduction-reachable contexts for one that types the body.
    std::optional<std::string> first_err;
    for (std::uint32_t v = 0; v < lts.states.size(); ++v) {
      if (!lts.red_reachable[v]) continue;
      ProcContext g2 = g;
      for (const auto& [ep, t] : lts.states[v].entries) g2.add_chan(ep, Payload{Sort::Unit, t});
      auto e = check(theta, std::move(g2), p->body);
      if (!e) return std::nullopt;
      if (!first_err) first_err = "restriction " + p->session + ": " + *e;
    }
    return first_err ? first_err : std::optional<std::string>("restriction " + p->session +
                                                              ": empty annotation");
  }
};

}  // namespace

std::optional<std::string> typecheck(const DefSigs& theta, const ProcContext& g,
                                     const ProcRef& p) {
  Typer t;
  return t.check(theta, g, p);
}

}  // namespace mpst
