// C interface: thin ownership-and-error-code shell over the core library.

#include "mpstcrash.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "process.hpp"
#include "properties.hpp"
#include "statespace.hpp"
#include "syntax.hpp"

using namespace mpst;

struct mpst_doc {
  ContextDocument doc;
};

struct mpst_lts {
  Lts lts;
};

struct mpst_system {
  ProcessDocument doc;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int fail(char** err, int code, const std::string& msg) {
  if (err) *err = dup_string(msg);
  return code;
}

int read_file(const char* path, std::string& out, char** err) {
  if (!path) return fail(err, MPST_ERR_ARG, "null path");
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(err, MPST_ERR_IO, std::string("cannot read ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) return fail(err, MPST_ERR_IO, std::string("cannot read ") + path);
  out = buf.str();
  return MPST_OK;
}

int doc_from_text(const std::string& text, mpst_doc** out, char** err) {
  if (!out) return fail(err, MPST_ERR_ARG, "null output handle");
  auto parsed = parse_context(text);
  if (auto* pe = std::get_if<ParseError>(&parsed)) return fail(err, MPST_ERR_PARSE, pe->render());
  auto& doc = std::get<ContextDocument>(parsed);
  auto problems = validate_context(doc);
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) {
      if (!msg.empty()) msg += "\n";
      msg += p;
    }
    return fail(err, MPST_ERR_INVALID, msg);
  }
  *out = new mpst_doc{std::move(doc)};
  return MPST_OK;
}

int system_from_text(const std::string& text, mpst_system** out, char** err) {
  if (!out) return fail(err, MPST_ERR_ARG, "null output handle");
  auto parsed = parse_process(text);
  if (auto* pe = std::get_if<ParseError>(&parsed)) return fail(err, MPST_ERR_PARSE, pe->render());
  *out = new mpst_system{std::move(std::get<ProcessDocument>(parsed))};
  return MPST_OK;
}

ProcContext context_of(const mpst_doc* context) {
  ProcContext g;
  if (context)
    for (const auto& [ep, ty] : context->doc.bindings) g.add_chan(ep, Payload{Sort::Unit, ty});
  return g;
}

ReliableMap reliable_of(const mpst_doc* context) {
  ReliableMap rel;
  if (context)
    rel[context->doc.session] =
        std::set<std::string>(context->doc.reliable.begin(), context->doc.reliable.end());
  return rel;
}

}  // namespace

extern "C" {

void mpst_string_free(char* s) { std::free(s); }

void mpst_strings_free(char** v, size_t n) {
  if (!v) return;
  for (size_t i = 0; i < n; ++i) std::free(v[i]);
  std::free(v);
}

/* ---- protocol documents ---- */

int mpst_doc_parse(const char* text, mpst_doc** out, char** err) {
  if (!text) return fail(err, MPST_ERR_ARG, "null input text");
  return doc_from_text(text, out, err);
}

int mpst_doc_read(const char* path, mpst_doc** out, char** err) {
  std::string text;
  if (int rc = read_file(path, text, err)) return rc;
  return doc_from_text(text, out, err);
}

void mpst_doc_free(mpst_doc* doc) { delete doc; }

const char* mpst_doc_session(const mpst_doc* doc) { return doc->doc.session.c_str(); }

size_t mpst_doc_binding_count(const mpst_doc* doc) { return doc->doc.bindings.size(); }

const char* mpst_doc_role(const mpst_doc* doc, size_t i) {
  return doc->doc.bindings[i].first.role.c_str();
}

char* mpst_doc_type(const mpst_doc* doc, size_t i) {
  return dup_string(print_type(doc->doc.bindings[i].second));
}

size_t mpst_doc_reliable_count(const mpst_doc* doc) { return doc->doc.reliable.size(); }

const char* mpst_doc_reliable(const mpst_doc* doc, size_t i) {
  return doc->doc.reliable[i].c_str();
}

char* mpst_doc_print(const mpst_doc* doc) { return dup_string(print_context(doc->doc)); }

/* ---- state spaces ---- */

int mpst_lts_build(const mpst_doc* doc, const char* const* reliable, size_t reliable_len,
                   uint64_t max_states, mpst_lts** out, char** err) {
  if (!doc || !out) return fail(err, MPST_ERR_ARG, "null argument");
  std::vector<std::string> rel;
  if (reliable) {
    for (size_t i = 0; i < reliable_len; ++i) {
      if (!reliable[i]) return fail(err, MPST_ERR_ARG, "null role in reliable set");
      rel.emplace_back(reliable[i]);
    }
    std::sort(rel.begin(), rel.end());
    rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
    for (const auto& r : rel) {
      bool known = false;
      for (const auto& [ep, ty] : doc->doc.bindings) known = known || ep.role == r;
      if (!known) return fail(err, MPST_ERR_INVALID, "reliable role " + r + " has no endpoint");
    }
  } else {
    rel = doc->doc.reliable;
  }
  LtsLimits limits;
  if (max_states) limits.max_states = max_states;
  auto built = build_lts(doc->doc.to_context(), doc->doc.session, rel, limits);
  if (auto* lim = std::get_if<LimitExceeded>(&built))
    return fail(err, MPST_ERR_LIMIT,
                lim->what + " limit exceeded after " + std::to_string(lim->seen));
  *out = new mpst_lts{std::move(std::get<Lts>(built))};
  return MPST_OK;
}

void mpst_lts_free(mpst_lts* lts) { delete lts; }

uint64_t mpst_lts_states(const mpst_lts* lts) { return lts->lts.states.size(); }

uint64_t mpst_lts_edges(const mpst_lts* lts) { return lts->lts.edges.size(); }

uint64_t mpst_lts_reduction_states(const mpst_lts* lts) { return lts->lts.red_state_count; }

uint64_t mpst_lts_reduction_edges(const mpst_lts* lts) { return lts->lts.red_edge_count; }

char* mpst_lts_dot(const mpst_lts* lts) { return dup_string(lts_to_dot(lts->lts)); }

char* mpst_lts_json(const mpst_lts* lts) { return dup_string(lts_to_json(lts->lts)); }

int mpst_check(const mpst_lts* lts, const char* property, int* holds, int* conclusive,
               char*** witness, size_t* witness_len, char** err) {
  if (!lts || !property || !holds || !conclusive) return fail(err, MPST_ERR_ARG, "null argument");
  std::string name = property;
  Verdict v;
  if (name == "safe")
    v = check_safety(lts->lts);
  else if (name == "df")
    v = check_deadlock_free(lts->lts);
  else if (name == "live")
    v = check_live(lts->lts);
  else if (name == "term")
    v = check_terminating(lts->lts);
  else if (name == "nterm")
    v = check_never_terminating(lts->lts);
  else
    return fail(err, MPST_ERR_ARG, "unknown property " + name);
  *holds = v.holds ? 1 : 0;
  *conclusive = v.conclusive ? 1 : 0;
  if (witness && witness_len) {
    *witness = nullptr;
    *witness_len = 0;
    if (!v.witness.empty()) {
      char** lines = static_cast<char**>(std::calloc(v.witness.size(), sizeof(char*)));
      if (lines) {
        for (size_t i = 0; i < v.witness.size(); ++i) lines[i] = dup_string(v.witness[i]);
        *witness = lines;
        *witness_len = v.witness.size();
      }
    }
  }
  return MPST_OK;
}

/* ---- process systems ---- */

int mpst_system_parse(const char* text, mpst_system** out, char** err) {
  if (!text) return fail(err, MPST_ERR_ARG, "null input text");
  return system_from_text(text, out, err);
}

int mpst_system_read(const char* path, mpst_system** out, char** err) {
  std::string text;
  if (int rc = read_file(path, text, err)) return rc;
  return system_from_text(text, out, err);
}

void mpst_system_free(mpst_system* sys) { delete sys; }

char* mpst_system_print(const mpst_system* sys) { return dup_string(print_process(sys->doc.proc)); }

int mpst_typecheck(const mpst_system* sys, const mpst_doc* context, char** err) {
  if (!sys) return fail(err, MPST_ERR_ARG, "null argument");
  auto problem = typecheck(sys->doc.sigs, context_of(context), sys->doc.proc);
  if (problem) return fail(err, MPST_ERR_TYPING, *problem);
  return MPST_OK;
}

int mpst_explore(const mpst_system* sys, const mpst_doc* context, int depth, uint64_t* visited,
                 int* error_free, char** err) {
  if (!sys || !visited || !error_free) return fail(err, MPST_ERR_ARG, "null argument");
  if (depth < 0) return fail(err, MPST_ERR_ARG, "negative depth");
  const ReliableMap rel = reliable_of(context);
  auto cmp = [](const ProcRef& a, const ProcRef& b) { return proc_compare(a, b) < 0; };
  std::set<ProcRef, decltype(cmp)> seen(cmp);
  std::vector<ProcRef> frontier{congruence_normal(sys->doc.proc)};
  seen.insert(frontier.front());
  bool clean = !has_error(frontier.front());
  for (int level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<ProcRef> next;
    for (const auto& p : frontier)
      for (const auto& succ : filtered_step(p, rel)) {
        ProcRef q = congruence_normal(succ.process);
        if (!seen.insert(q).second) continue;
        clean = clean && !has_error(q);
        next.push_back(std::move(q));
        if (seen.size() > 1000000) {
          *visited = seen.size();
          *error_free = clean ? 1 : 0;
          return fail(err, MPST_ERR_LIMIT, "exploration exceeded 1000000 systems");
        }
      }
    frontier = std::move(next);
  }
  *visited = seen.size();
  *error_free = clean ? 1 : 0;
  return MPST_OK;
}

}  // extern "C"
