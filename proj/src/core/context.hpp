#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace mpst {

struct Endpoint {
  std::string session;
  std::string role;

  bool operator==(const Endpoint& o) const { return session == o.session && role == o.role; }
  bool operator<(const Endpoint& o) const {
    if (session != o.session) return session < o.session;
    return role < o.role;
  }
};

// A typing context: a finite map from endpoints to session types or stop.
// Entries are kept sorted by endpoint so equal contexts compare equal.
struct Context {
  std::vector<std::pair<Endpoint, TypeRef>> entries;

  void set(const Endpoint& ep, TypeRef t);
  const TypeRef* find(const Endpoint& ep) const;
  bool erase(const Endpoint& ep);
  bool empty() const { return entries.empty(); }

  bool has_session(const std::string& s) const;
  std::vector<std::string> roles_of(const std::string& s) const;
};

bool context_equal(const Context& a, const Context& b);
int context_compare(const Context& a, const Context& b);
std::size_t context_hash(const Context& g);
std::string context_short(const Context& g);

enum class ActKind : uint8_t { Output, Input, Comm, Crash, CrashDetect, Stopped };

// Transition label over a context LTS.
//   Output:      p sends label to q (one-sided barb)
//   Input:       p receives label from q (one-sided barb; crash arms included)
//   Comm:        message from p to q transmitted (or lost if q has stopped)
//   Crash:       p crashes
//   CrashDetect: p detected that q crashed
//   Stopped:     p is crashed (self-loop barb)
struct TransitionLabel {
  ActKind kind;
  std::string session;
  std::string p;
  std::string q;        // unused for Crash/Stopped
  std::string label;    // Output/Input/Comm only
  Payload payload;      // Output/Input only

  bool operator==(const TransitionLabel& o) const;
};

int label_compare(const TransitionLabel& a, const TransitionLabel& b);
std::size_t label_hash(const TransitionLabel& l);
std::string label_render(const TransitionLabel& l);

struct Successor {
  TransitionLabel label;
  Context state;
};

// All transitions of `g` on session `s` derivable from the context semantics:
// per-entry output/input/stopped barbs, synchronized communication (matching
// label, payload subtyping), crashes of unreliable non-terminated entries,
// lost messages into stopped endpoints, and crash detection. Entries of other
// sessions are inert. Results are deterministically ordered by label.
std::vector<Successor> successors(const Context& g, const std::string& s,
                                  const std::vector<std::string>& reliable);

enum class ReductionMode : uint8_t { NonCrash, MaybeCrash };

// The reduction subsets: NonCrash keeps Comm and CrashDetect; MaybeCrash also
// keeps Crash (already restricted to unreliable roles by `successors`).
std::vector<Successor> reduction_successors(const Context& g, const std::string& s,
                                            const std::vector<std::string>& reliable,
                                            ReductionMode mode);

}  // namespace mpst
