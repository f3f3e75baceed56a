#include "syntax.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "lexer.hpp"

namespace mpst {

Context ContextDocument::to_context() const {
  Context g;
  for (const auto& [ep, t] : bindings) g.set(ep, t);
  return g;
}

namespace {

using lex::Tok;
using lex::Token;

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  ParseError err;
  bool failed = false;

  const Token& peek() const { return toks[pos]; }
  const Token& next() { return toks[pos++]; }

  bool fail(const std::string& msg, const Token& at) {
    if (!failed) {
      failed = true;
      err = ParseError{msg, at.line, at.col};
    }
    return false;
  }

  bool expect_punct(char c) {
    const Token& t = peek();
    if (t.kind == Tok::Punct && t.text[0] == c) { pos++; return true; }
    return fail(std::string("expected '") + c + "'", t);
  }

  bool at_punct(char c) const {
    return peek().kind == Tok::Punct && peek().text[0] == c;
  }

  bool at_ident(const char* w) const {
    return peek().kind == Tok::Ident && peek().text == w;
  }

  bool expect_ident(std::string& out, const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) return fail(std::string("expected ") + what, t);
    out = t.text;
    pos++;
    return true;
  }

  // ---- types ----

  static bool is_basic_kw(const std::string& w) {
    return sort_from_name(w).has_value();
  }

  static bool is_reserved(const std::string& w) {
    return w == "session" || w == "reliable" || w == "rec" || w == "end" || w == "stop" ||
           is_basic_kw(w);
  }

  TypeRef parse_type(std::vector<std::string>& binders) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) { fail("expected a type", t); return nullptr; }
    if (t.text == "end") { pos++; return t_end(); }
    if (t.text == "stop") { pos++; return t_stop(); }
    if (t.text == "rec") {
      pos++;
      std::string name;
      if (!expect_ident(name, "recursion variable")) return nullptr;
      if (is_reserved(name)) { fail("reserved word as recursion variable", toks[pos - 1]); return nullptr; }
      if (!expect_punct('.')) return nullptr;
      binders.push_back(name);
      TypeRef body = parse_type(binders);
      binders.pop_back();
      if (!body) return nullptr;
      return t_rec(std::move(body), name);
    }
    // Bound recursion variable?
    for (std::size_t i = binders.size(); i > 0; --i) {
      if (binders[i - 1] == t.text) {
        pos++;
        return t_var(static_cast<int>(binders.size() - i), t.text);
      }
    }
    // Role choice: IDENT '!' branches | IDENT '?' branches
    std::string role = t.text;
    pos++;
    const Token& op = peek();
    if (op.kind != Tok::Punct || (op.text[0] != '!' && op.text[0] != '?')) {
      fail("expected '!' or '?' after role (or unbound recursion variable '" + role + "')", op);
      return nullptr;
    }
    bool internal = op.text[0] == '!';
    pos++;
    std::vector<Branch> branches;
    if (!parse_branches(binders, internal, branches)) return nullptr;
    return internal ? t_internal(role, std::move(branches)) : t_external(role, std::move(branches));
  }

  bool parse_branches(std::vector<std::string>& binders, bool internal,
                      std::vector<Branch>& out) {
    if (!expect_punct('{')) return false;
    while (true) {
      const Token& lt = peek();
      std::string label;
      if (!expect_ident(label, "label")) return false;
      if (label == kCrashLabel && internal) return fail("crash in internal choice", lt);
      Payload payload;  // unit when omitted
      if (at_punct('(')) {
        if (label == kCrashLabel) return fail("crash branch carries a payload", peek());
        pos++;
        if (!parse_payload(payload)) return false;
        if (!expect_punct(')')) return false;
      }
      if (!expect_punct('.')) return false;
      TypeRef cont = parse_type(binders);
      if (!cont) return false;
      out.push_back(Branch{std::move(label), std::move(payload), std::move(cont)});
      if (at_punct(',')) { pos++; continue; }
      break;
    }
    return expect_punct('}');
  }

  bool parse_payload(Payload& out) {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      if (auto s = sort_from_name(t.text)) {
        pos++;
        out.sort = *s;
        return true;
      }
    }
    // Delegation payload: a closed session type.
    std::vector<std::string> empty;
    TypeRef ty = parse_type(empty);
    if (!ty) return false;
    out.session = std::move(ty);
    return true;
  }

  // ---- documents ----

  bool parse_document(ContextDocument& doc) {
    const Token& t = peek();
    if (!at_ident("session")) return fail("expected 'session'", t);
    pos++;
    if (!expect_ident(doc.session, "session name")) return false;
    if (at_ident("reliable")) {
      pos++;
      while (true) {
        std::string role;
        if (!expect_ident(role, "role")) return false;
        doc.reliable.push_back(std::move(role));
        if (at_punct(',')) { pos++; continue; }
        break;
      }
    }
    while (peek().kind != Tok::End) {
      std::string sess;
      if (!expect_ident(sess, "session name in binding")) return false;
      if (!expect_punct('[')) return false;
      std::string role;
      if (!expect_ident(role, "role")) return false;
      if (!expect_punct(']')) return false;
      if (!expect_punct('=')) return false;
      std::vector<std::string> binders;
      TypeRef ty = parse_type(binders);
      if (!ty) return false;
      doc.bindings.push_back({Endpoint{std::move(sess), std::move(role)}, std::move(ty)});
    }
    if (doc.bindings.empty()) return fail("document has no bindings", peek());
    return true;
  }

  // ---- processes ----

  static bool is_proc_reserved(const std::string& w) {
    return is_reserved(w) || w == "new" || w == "in" || w == "def" || w == "stopped" ||
           w == "error" || w == "true" || w == "false";
  }

  bool parse_name(std::string& out, const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident) return fail(std::string("expected ") + what, t);
    if (is_proc_reserved(t.text))
      return fail("reserved word '" + t.text + "' as " + what, t);
    out = t.text;
    pos++;
    return true;
  }

  bool parse_value(Value& out) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: {
        pos++;
        try {
          out = Value::of_int(std::stoll(t.text));
        } catch (...) {
          return fail("integer literal out of range", t);
        }
        return true;
      }
      case Tok::Real: {
        pos++;
        try {
          out = Value::of_real(std::stod(t.text));
        } catch (...) {
          return fail("real literal out of range", t);
        }
        return true;
      }
      case Tok::Str: pos++; out = Value::of_str(t.text); return true;
      case Tok::Punct:
        if (t.text[0] == '(') {
          pos++;
          if (!expect_punct(')')) return false;
          out = Value::unit();
          return true;
        }
        return fail("expected a value", t);
      case Tok::Ident: {
        if (t.text == "true") { pos++; out = Value::of_bool(true); return true; }
        if (t.text == "false") { pos++; out = Value::of_bool(false); return true; }
        std::string name;
        if (!parse_name(name, "a value")) return false;
        if (at_punct('[')) {
          pos++;
          std::string role;
          if (!parse_name(role, "role")) return false;
          if (!expect_punct(']')) return false;
          out = Value::of_chan({std::move(name), std::move(role)});
          return true;
        }
        out = Value::of_var(std::move(name));
        return true;
      }
      case Tok::End: return fail("expected a value", t);
    }
    return false;
  }

  ProcRef parse_proc_par() {
    ProcRef p = parse_proc_term();
    if (!p) return nullptr;
    while (at_punct('|')) {
      pos++;
      ProcRef q = parse_proc_term();
      if (!q) return nullptr;
      p = p_parallel(std::move(p), std::move(q));
    }
    return p;
  }

  ProcRef parse_annotation(const std::string& session, RestrictionAnn& ann) {
    // Returns a dummy non-null marker on success so callers can share the
    // null-on-failure convention; the annotation itself goes to `ann`.
    if (at_ident("reliable")) {
      pos++;
      while (true) {
        std::string role;
        if (!parse_name(role, "reliable role")) return nullptr;
        ann.reliable.push_back(std::move(role));
        if (at_punct(',')) { pos++; continue; }
        break;
      }
    }
    while (!at_punct('}')) {
      const Token& t = peek();
      std::string sess;
      if (!parse_name(sess, "endpoint binding")) return nullptr;
      if (sess != session) {
        fail("annotation for '" + session + "' binds '" + sess + "'", t);
        return nullptr;
      }
      if (!expect_punct('[')) return nullptr;
      std::string role;
      if (!parse_name(role, "role")) return nullptr;
      if (!expect_punct(']')) return nullptr;
      if (!expect_punct('=')) return nullptr;
      std::vector<std::string> binders;
      TypeRef ty = parse_type(binders);
      if (!ty) return nullptr;
      ann.roles.push_back({std::move(role), std::move(ty)});
    }
    if (ann.roles.empty()) { fail("annotation has no bindings", peek()); return nullptr; }
    return p_inaction();
  }

  ProcRef parse_proc_term() {
    const Token& t = peek();
    if (t.kind == Tok::Int && t.text == "0") { pos++; return p_inaction(); }
    if (t.kind == Tok::Punct && t.text[0] == '(') {
      pos++;
      ProcRef p = parse_proc_par();
      if (!p) return nullptr;
      if (!expect_punct(')')) return nullptr;
      return p;
    }
    if (t.kind != Tok::Ident) { fail("expected a process", t); return nullptr; }

    if (t.text == "error") { pos++; return p_error(); }
    if (t.text == "stopped") {
      pos++;
      std::string sess, role;
      if (!parse_name(sess, "session name")) return nullptr;
      if (!expect_punct('[')) return nullptr;
      if (!parse_name(role, "role")) return nullptr;
      if (!expect_punct(']')) return nullptr;
      return p_crashed(std::move(sess), std::move(role));
    }
    if (t.text == "new") {
      pos++;
      std::string sess;
      if (!parse_name(sess, "session name")) return nullptr;
      if (!expect_punct(':')) return nullptr;
      if (!expect_punct('{')) return nullptr;
      RestrictionAnn ann;
      if (!parse_annotation(sess, ann)) return nullptr;
      if (!expect_punct('}')) return nullptr;
      if (!at_ident("in")) { fail("expected 'in'", peek()); return nullptr; }
      pos++;
      ProcRef body = parse_proc_par();
      if (!body) return nullptr;
      return p_restriction(std::move(sess), std::move(ann), std::move(body));
    }
    if (t.text == "def") {
      pos++;
      std::string name;
      if (!parse_name(name, "definition name")) return nullptr;
      if (!expect_punct('(')) return nullptr;
      std::vector<std::pair<std::string, Payload>> params;
      if (!at_punct(')')) {
        while (true) {
          std::string pn;
          if (!parse_name(pn, "parameter")) return nullptr;
          if (!expect_punct(':')) return nullptr;
          Payload ty;
          if (!parse_payload(ty)) return nullptr;
          params.push_back({std::move(pn), std::move(ty)});
          if (at_punct(',')) { pos++; continue; }
          break;
        }
      }
      if (!expect_punct(')')) return nullptr;
      if (!expect_punct('=')) return nullptr;
      ProcRef body = parse_proc_par();
      if (!body) return nullptr;
      if (!at_ident("in")) { fail("expected 'in'", peek()); return nullptr; }
      pos++;
      ProcRef cont = parse_proc_par();
      if (!cont) return nullptr;
      return p_def(std::move(name), std::move(params), std::move(body), std::move(cont));
    }
    if (is_proc_reserved(t.text)) { fail("unexpected '" + t.text + "'", t); return nullptr; }

    std::string head = t.text;
    pos++;
    if (at_punct('(')) {
      pos++;
      std::vector<Value> args;
      if (!at_punct(')')) {
        while (true) {
          Value v;
          if (!parse_value(v)) return nullptr;
          args.push_back(std::move(v));
          if (at_punct(',')) { pos++; continue; }
          break;
        }
      }
      if (!expect_punct(')')) return nullptr;
      return p_call(std::move(head), std::move(args));
    }

    if (!expect_punct('[')) return nullptr;
    std::string first;
    if (!parse_name(first, "role")) return nullptr;
    if (!expect_punct(']')) return nullptr;
    Value subject;
    std::string peer;
    if (at_punct('[')) {
      pos++;
      if (!parse_name(peer, "role")) return nullptr;
      if (!expect_punct(']')) return nullptr;
      subject = Value::of_chan({std::move(head), std::move(first)});
    } else {
      subject = Value::of_var(std::move(head));
      peer = std::move(first);
    }

    const Token& op = peek();
    if (op.kind != Tok::Punct || (op.text[0] != '!' && op.text[0] != '?')) {
      fail("expected '!' or '?'", op);
      return nullptr;
    }
    bool sending = op.text[0] == '!';
    pos++;
    if (sending) {
      const Token& lt = peek();
      std::string label;
      if (lt.kind == Tok::Ident && lt.text == kCrashLabel) {
        fail("the crash label cannot be sent", lt);
        return nullptr;
      }
      if (!parse_name(label, "label")) return nullptr;
      if (!expect_punct('(')) return nullptr;
      Value arg;
      if (!parse_value(arg)) return nullptr;
      if (!expect_punct(')')) return nullptr;
      if (!expect_punct('.')) return nullptr;
      ProcRef cont = parse_proc_term();
      if (!cont) return nullptr;
      return p_selection(std::move(subject), std::move(peer), std::move(label), std::move(arg),
                         std::move(cont));
    }
    if (!expect_punct('{')) return nullptr;
    std::vector<ProcBranch> branches;
    std::set<std::string> labels;
    while (true) {
      const Token& lt = peek();
      ProcBranch b;
      if (lt.kind == Tok::Ident && lt.text == kCrashLabel) {
        pos++;
        b.label = kCrashLabel;
        if (at_punct('(')) { fail("the crash branch carries no payload", peek()); return nullptr; }
      } else {
        if (!parse_name(b.label, "label")) return nullptr;
        if (!expect_punct('(')) return nullptr;
        if (!parse_name(b.var, "payload variable")) return nullptr;
        if (!expect_punct(')')) return nullptr;
      }
      if (!labels.insert(b.label).second) {
        fail("duplicate branch label " + b.label, lt);
        return nullptr;
      }
      if (!expect_punct('.')) return nullptr;
      b.cont = parse_proc_term();
      if (!b.cont) return nullptr;
      branches.push_back(std::move(b));
      if (at_punct(',')) { pos++; continue; }
      break;
    }
    if (!expect_punct('}')) return nullptr;
    return p_branching(std::move(subject), std::move(peer), std::move(branches));
  }
};

}  // namespace

std::variant<ContextDocument, ParseError> parse_context(const std::string& text) {
  lex::Lexer lx;
  if (!lx.run(text)) return ParseError{lx.error, lx.err_line, lx.err_col};
  Parser p{lx.toks};
  ContextDocument doc;
  if (!p.parse_document(doc)) return p.err;
  return doc;
}

std::vector<std::string> validate_context(const ContextDocument& doc) {
  std::vector<std::string> errs;
  std::set<Endpoint> seen;
  std::set<std::string> roles;
  for (const auto& [ep, t] : doc.bindings) {
    if (!seen.insert(ep).second)
      errs.push_back("duplicate binding for " + ep.session + "[" + ep.role + "]");
    if (ep.session == doc.session) roles.insert(ep.role);
    if (auto v = well_formed(t))
      errs.push_back(ep.session + "[" + ep.role + "]: " + *v);
  }
  for (const std::string& r : doc.reliable) {
    if (!roles.count(r)) errs.push_back("reliable role " + r + " has no binding in session " +
                                        doc.session);
  }
  return errs;
}

namespace {

// Fresh printable name for a binder whose hint is missing or shadowed.
std::string fresh_name(const std::vector<std::string>& stack, const std::string& hint) {
  auto taken = [&](const std::string& n) {
    return std::find(stack.begin(), stack.end(), n) != stack.end() ||
           Parser::is_reserved(n);
  };
  if (!hint.empty() && !taken(hint)) return hint;
  std::string base = hint.empty() ? "t" : hint;
  for (int i = 1;; ++i) {
    std::string n = base + std::to_string(i);
    if (!taken(n)) return n;
  }
}

void print_payload(const Payload& p, std::string& out);

// One-line rendering with the same fresh-name discipline as the full printer,
// so the wrap decision below cannot depend on surface name hints.
void print_type_flat(const TypeRef& t, std::vector<std::string>& stack, std::string& out) {
  switch (t->kind) {
    case TypeKind::End: out += "end"; return;
    case TypeKind::Stop: out += "stop"; return;
    case TypeKind::Var: {
      int i = static_cast<int>(stack.size()) - 1 - t->var;
      out += (i >= 0 && i < static_cast<int>(stack.size())) ? stack[i]
                                                            : "#" + std::to_string(t->var);
      return;
    }
    case TypeKind::Rec: {
      std::string name = fresh_name(stack, t->rec_hint);
      out += "rec " + name + ". ";
      stack.push_back(name);
      print_type_flat(t->body, stack, out);
      stack.pop_back();
      return;
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      out += t->peer;
      out += t->kind == TypeKind::Internal ? '!' : '?';
      out += '{';
      bool first = true;
      for (const Branch& b : t->branches) {
        if (!first) out += ", ";
        first = false;
        out += b.label;
        if (b.payload.is_session() || b.payload.sort != Sort::Unit) {
          out += '(';
          if (b.payload.is_session()) {
            std::vector<std::string> fresh;
            print_type_flat(b.payload.session, fresh, out);
          } else {
            out += sort_name(b.payload.sort);
          }
          out += ')';
        }
        out += ". ";
        print_type_flat(b.cont, stack, out);
      }
      out += '}';
      return;
    }
  }
}

void print_type_rec(const TypeRef& t, std::vector<std::string>& stack, int indent,
                    std::string& out) {
  switch (t->kind) {
    case TypeKind::End: out += "end"; return;
    case TypeKind::Stop: out += "stop"; return;
    case TypeKind::Var: {
      int i = static_cast<int>(stack.size()) - 1 - t->var;
      out += (i >= 0 && i < static_cast<int>(stack.size())) ? stack[i]
                                                            : "#" + std::to_string(t->var);
      return;
    }
    case TypeKind::Rec: {
      std::string name = fresh_name(stack, t->rec_hint);
      out += "rec " + name + ". ";
      stack.push_back(name);
      print_type_rec(t->body, stack, indent, out);
      stack.pop_back();
      return;
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      // Inline when the one-line rendering is short, otherwise one branch per line.
      std::string flat;
      print_type_flat(t, stack, flat);
      if (flat.size() <= 56) {
        out += flat;
        return;
      }
      out += t->peer;
      out += t->kind == TypeKind::Internal ? '!' : '?';
      out += '{';
      std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
      bool first = true;
      for (const Branch& b : t->branches) {
        if (!first) out += ',';
        out += '\n';
        out += pad;
        first = false;
        out += b.label;
        if (b.payload.is_session() || b.payload.sort != Sort::Unit) {
          out += '(';
          print_payload(b.payload, out);
          out += ')';
        }
        out += ". ";
        print_type_rec(b.cont, stack, indent + 2, out);
      }
      out += '\n';
      out += std::string(static_cast<std::size_t>(indent), ' ');
      out += '}';
      return;
    }
  }
}

void print_payload(const Payload& p, std::string& out) {
  if (p.is_session()) {
    std::vector<std::string> stack;
    print_type_rec(p.session, stack, 0, out);
  } else {
    out += sort_name(p.sort);
  }
}

}  // namespace

std::string print_type(const TypeRef& t) {
  std::vector<std::string> stack;
  std::string out;
  print_type_rec(t, stack, 0, out);
  return out;
}

std::string print_context(const ContextDocument& doc) {
  std::string out = "session " + doc.session;
  if (!doc.reliable.empty()) {
    out += " reliable ";
    for (std::size_t i = 0; i < doc.reliable.size(); ++i) {
      if (i) out += ", ";
      out += doc.reliable[i];
    }
  }
  out += "\n";
  for (const auto& [ep, t] : doc.bindings) {
    out += "\n" + ep.session + "[" + ep.role + "] = ";
    std::vector<std::string> stack;
    print_type_rec(t, stack, 0, out);
    out += "\n";
  }
  return out;
}

std::variant<ProcessDocument, ParseError> parse_process(const std::string& text) {
  lex::Lexer lx;
  if (!lx.run(text)) return ParseError{lx.error, lx.err_line, lx.err_col};
  Parser p{lx.toks};
  ProcRef proc = p.parse_proc_par();
  if (!proc) return p.err;
  if (p.peek().kind != Tok::End) {
    p.fail("unexpected trailing input", p.peek());
    return p.err;
  }
  return ProcessDocument{{}, std::move(proc)};
}

namespace {

void print_value_text(const Value& v, std::string& out) {
  switch (v.kind) {
    case VKind::Unit: out += "()"; return;
    case VKind::Int: out += std::to_string(v.ival); return;
    case VKind::Bool: out += v.bval ? "true" : "false"; return;
    case VKind::Real: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v.rval);
      std::string s = buf;
      if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
      out += s;
      return;
    }
    case VKind::Str:
      out += '"';
      for (char c : v.sval) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
      return;
    case VKind::Var: out += v.var; return;
    case VKind::Chan: out += v.chan.session + "[" + v.chan.role + "]"; return;
  }
}

void print_proc_par(const ProcRef& p, int indent, std::string& out);

void flatten_parallel(const ProcRef& p, std::vector<ProcRef>& out) {
  if (p->kind == PKind::Parallel) {
    flatten_parallel(p->left, out);
    flatten_parallel(p->right, out);
  } else {
    out.push_back(p);
  }
}

void print_proc_term(const ProcRef& p, int indent, std::string& out) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  auto print_cont = [&](const ProcRef& c, int ind) {
    if (c->kind == PKind::Parallel || c->kind == PKind::Restriction || c->kind == PKind::Def) {
      out += '(';
      print_proc_par(c, ind, out);
      out += ')';
    } else {
      print_proc_term(c, ind, out);
    }
  };
  switch (p->kind) {
    case PKind::Inaction: out += '0'; return;
    case PKind::Error: out += "error"; return;
    case PKind::Crashed: out += "stopped " + p->session + "[" + p->role + "]"; return;
    case PKind::Call: {
      out += p->name + "(";
      for (std::size_t i = 0; i < p->args.size(); ++i) {
        if (i) out += ", ";
        print_value_text(p->args[i], out);
      }
      out += ')';
      return;
    }
    case PKind::Selection: {
      print_value_text(p->chan, out);
      out += "[" + p->role + "]!" + p->label + "(";
      print_value_text(p->arg, out);
      out += "). ";
      print_cont(p->cont, indent);
      return;
    }
    case PKind::Branching: {
      std::string flat;
      {
        print_value_text(p->chan, flat);
        flat += "[" + p->role + "]?{";
        bool first = true;
        for (const ProcBranch& b : p->branches) {
          if (!first) flat += ", ";
          first = false;
          flat += b.label;
          if (!b.var.empty()) flat += "(" + b.var + ")";
          flat += ". ";
          std::string sub;
          print_proc_term(b.cont, indent, sub);
          if (b.cont->kind == PKind::Parallel || b.cont->kind == PKind::Restriction ||
              b.cont->kind == PKind::Def)
            sub = "(" + sub + ")";
          flat += sub;
        }
        flat += '}';
      }
      if (indent + static_cast<int>(flat.size()) <= 96 &&
          flat.find('\n') == std::string::npos) {
        out += flat;
        return;
      }
      print_value_text(p->chan, out);
      out += "[" + p->role + "]?{";
      std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
      bool first = true;
      for (const ProcBranch& b : p->branches) {
        if (!first) out += ',';
        first = false;
        out += '\n' + pad2 + b.label;
        if (!b.var.empty()) out += "(" + b.var + ")";
        out += ". ";
        print_cont(b.cont, indent + 2);
      }
      out += '\n' + pad + '}';
      return;
    }
    case PKind::Restriction: {
      out += "new " + p->session + " : {";
      std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
      if (!p->ann.reliable.empty()) {
        out += '\n' + pad2 + "reliable ";
        for (std::size_t i = 0; i < p->ann.reliable.size(); ++i) {
          if (i) out += ", ";
          out += p->ann.reliable[i];
        }
      }
      for (const auto& [role, t] : p->ann.roles) {
        out += '\n' + pad2 + p->session + "[" + role + "] = ";
        std::vector<std::string> stack;
        print_type_rec(t, stack, indent + 2, out);
      }
      out += '\n' + pad + "} in\n" + pad;
      print_proc_par(p->body, indent, out);
      return;
    }
    case PKind::Def: {
      out += "def " + p->name + "(";
      for (std::size_t i = 0; i < p->params.size(); ++i) {
        if (i) out += ", ";
        out += p->params[i].first + ": ";
        print_payload(p->params[i].second, out);
      }
      out += ") =\n";
      std::string pad2(static_cast<std::size_t>(indent) + 2, ' ');
      out += pad2;
      print_proc_par(p->body, indent + 2, out);
      out += '\n' + pad + "in\n" + pad;
      print_proc_par(p->cont, indent, out);
      return;
    }
    case PKind::Parallel: return;  // handled by print_proc_par
  }
}

void print_proc_par(const ProcRef& p, int indent, std::string& out) {
  std::vector<ProcRef> atoms;
  flatten_parallel(p, atoms);
  std::vector<std::string> parts;
  bool multiline = false;
  std::size_t total = 0;
  for (const ProcRef& a : atoms) {
    std::string s;
    if (a->kind == PKind::Restriction || a->kind == PKind::Def) {
      // Binders inside a parallel need parentheses to keep their scope.
      if (atoms.size() > 1) {
        s += '(';
        print_proc_term(a, indent + 1, s);
        s += ')';
      } else {
        print_proc_term(a, indent, s);
      }
    } else {
      print_proc_term(a, indent, s);
    }
    if (s.find('\n') != std::string::npos) multiline = true;
    total += s.size() + 3;
    parts.push_back(std::move(s));
  }
  if (parts.size() == 1) {
    out += parts[0];
    return;
  }
  if (!multiline && indent + static_cast<int>(total) <= 96) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += " | ";
      out += parts[i];
    }
    return;
  }
  std::string pad(static_cast<std::size_t>(indent), ' ');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '\n' + pad + "| ";
    out += parts[i];
  }
}

}  // namespace

std::string print_process(const ProcRef& p) {
  std::string out;
  print_proc_par(p, 0, out);
  out += '\n';
  return out;
}

}  // namespace mpst
