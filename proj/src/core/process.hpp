#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "context.hpp"
#include "types.hpp"

namespace mpst {

// Values a process can carry: basic literals, variables, or session endpoints.
enum class VKind { Unit, Int, Bool, Real, Str, Var, Chan };

struct Value {
  VKind kind = VKind::Unit;
  long long ival = 0;
  bool bval = false;
  double rval = 0.0;
  std::string sval;  // Str contents
  std::string var;   // Var name
  Endpoint chan;     // Chan endpoint

  static Value unit() { return {}; }
  static Value of_int(long long v) { return {VKind::Int, v}; }
  static Value of_bool(bool v) { return {VKind::Bool, 0, v}; }
  static Value of_real(double v) { return {VKind::Real, 0, false, v}; }
  static Value of_str(std::string v) { return {VKind::Str, 0, false, 0.0, std::move(v)}; }
  static Value of_var(std::string v) {
    Value x;
    x.kind = VKind::Var;
    x.var = std::move(v);
    return x;
  }
  static Value of_chan(Endpoint e) {
    Value x;
    x.kind = VKind::Chan;
    x.chan = std::move(e);
    return x;
  }
};

int value_compare(const Value& a, const Value& b);
bool value_equal(const Value& a, const Value& b);

enum class PKind {
  Inaction,
  Parallel,
  Restriction,
  Selection,
  Branching,
  Def,
  Call,
  Error,
  Crashed
};

struct Process;
using ProcRef = std::shared_ptr<const Process>;

struct ProcBranch {
  std::string label;
  std::string var;  // payload binder; empty for the crash branch
  ProcRef cont;
};

// Session entries and reliability assumption attached to a restriction.
struct RestrictionAnn {
  std::vector<std::string> reliable;
  std::vector<std::pair<std::string, TypeRef>> roles;

  Context to_context(const std::string& session) const;
};

struct Process {
  PKind kind = PKind::Inaction;
  ProcRef left, right;   // Parallel
  std::string session;   // Restriction binder; Crashed session
  RestrictionAnn ann;    // Restriction
  ProcRef body;          // Restriction and Def bodies
  Value chan;            // Selection/Branching subject channel
  std::string role;      // Selection: peer sent to; Branching: peer received from; Crashed: role
  std::string label;     // Selection
  Value arg;             // Selection payload
  ProcRef cont;          // Selection continuation; Def scope
  std::vector<ProcBranch> branches;  // Branching
  std::string name;      // Def/Call
  std::vector<std::pair<std::string, Payload>> params;  // Def
  std::vector<Value> args;                              // Call
};

ProcRef p_inaction();
ProcRef p_error();
ProcRef p_parallel(ProcRef left, ProcRef right);
ProcRef p_restriction(std::string session, RestrictionAnn ann, ProcRef body);
ProcRef p_selection(Value chan, std::string to, std::string label, Value arg, ProcRef cont);
ProcRef p_branching(Value chan, std::string from, std::vector<ProcBranch> branches);
ProcRef p_def(std::string name, std::vector<std::pair<std::string, Payload>> params, ProcRef body,
              ProcRef scope);
ProcRef p_call(std::string name, std::vector<Value> args);
ProcRef p_crashed(std::string session, std::string role);

std::set<Endpoint> free_channels(const ProcRef& p);
std::set<std::string> free_vars(const ProcRef& p);

// Total order on processes up to renaming of bound variables and sessions.
int proc_compare(const ProcRef& a, const ProcRef& b);
bool proc_equal(const ProcRef& a, const ProcRef& b);

// Canonical form under structural congruence: restrictions and definitions
// floated to a prenex spine, parallel flattened/sorted with units removed,
// dead restrictions and fully-crashed sessions garbage-collected, unused
// definitions dropped.
ProcRef congruence_normal(const ProcRef& p);

struct ProcSuccessor {
  std::string rule;
  ProcRef process;
};

// One reduction step, exploring up to congruence. With crash injection the
// crash, lost-message, and detection rules fire as well.
std::vector<ProcSuccessor> step(const ProcRef& p, bool crash_injection);

// Assumption-abiding steps: crashes are injected only where no endpoint of the
// dying process belongs to a reliable role, with restricted sessions governed
// by their annotations and free sessions by `reliable`.
using ReliableMap = std::map<std::string, std::set<std::string>>;
std::vector<ProcSuccessor> filtered_step(const ProcRef& p, const ReliableMap& reliable);

// True iff an `error` atom sits in evaluation position.
bool has_error(const ProcRef& p);

// True iff every process-call inside a definition body sits under a prefix.
bool defs_guarded(const ProcRef& p);

// Process typing environment: definition name -> parameter types.
using DefSigs = std::map<std::string, std::vector<Payload>>;

// Linear typing context for processes: variables and endpoints.
struct ProcEntry {
  bool is_var = false;
  std::string var;
  Endpoint ep;
  Payload type;
};

struct ProcContext {
  std::vector<ProcEntry> entries;

  void add_var(std::string name, Payload t);
  void add_chan(Endpoint ep, Payload t);
  const ProcEntry* find_var(const std::string& name) const;
  const ProcEntry* find_chan(const Endpoint& ep) const;
};

// Algorithmic typing: nullopt when derivable, otherwise an error naming the
// failed rule and subterm.
std::optional<std::string> typecheck(const DefSigs& theta, const ProcContext& g, const ProcRef& p);

}  // namespace mpst
