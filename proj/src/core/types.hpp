#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mpst {

// Basic payload sorts. int is a subsort of real; everything else only of itself.
enum class Sort : uint8_t { Unit, Int, Bool, Real, String };

const char* sort_name(Sort s);
std::optional<Sort> sort_from_name(const std::string& name);
bool sort_sub(Sort a, Sort b);

struct Type;
using TypeRef = std::shared_ptr<const Type>;

// A message payload: either a basic sort or a session type (channel delegation).
struct Payload {
  Sort sort = Sort::Unit;
  TypeRef session;  // non-null = delegation; sort is ignored then

  bool is_session() const { return session != nullptr; }
};

bool payload_equal(const Payload& a, const Payload& b);
// three-way: negative, zero, positive
int payload_compare(const Payload& a, const Payload& b);
std::size_t payload_hash(const Payload& p);

struct Branch {
  std::string label;  // "crash" marks the crash-detection branch
  Payload payload;    // crash branches always carry unit
  TypeRef cont;
};

inline constexpr const char* kCrashLabel = "crash";

enum class TypeKind : uint8_t {
  End,       // successfully terminated endpoint
  Stop,      // crashed endpoint; legal only at the top of a context entry
  Var,       // recursion variable, de Bruijn index
  Rec,       // recursive type
  Internal,  // select: send one of the labelled branches to `peer`
  External,  // branch: receive one of the labelled branches from `peer`
};

struct Type {
  TypeKind kind;
  int var = -1;                  // Var
  TypeRef body;                  // Rec
  std::string peer;              // Internal/External
  std::vector<Branch> branches;  // written order; equality sorts by label
  std::string rec_hint;          // surface name for printing Rec/Var
  std::size_t shash = 0;         // structural hash, filled by factories
};

TypeRef t_end();
TypeRef t_stop();
TypeRef t_var(int index, std::string hint = {});
TypeRef t_rec(TypeRef body, std::string hint = {});
TypeRef t_internal(std::string peer, std::vector<Branch> branches);
TypeRef t_external(std::string peer, std::vector<Branch> branches);

bool type_equal(const TypeRef& a, const TypeRef& b);
int type_compare(const TypeRef& a, const TypeRef& b);
inline std::size_t type_hash(const TypeRef& t) { return t ? t->shash : 0; }

// One-line canonical rendering; used for diagnostics, hashing aids and DOT.
std::string type_short(const TypeRef& t);

// Violation report for a malformed type: empty optional = well-formed.
// Checks: closed, guarded recursion, nonempty choices, distinct labels,
// crash only in external choices and payload-free, stop never nested.
std::optional<std::string> well_formed(const TypeRef& t);

// Head unfolding: rec t.T becomes T[rec t.T / t]; other heads unchanged.
TypeRef unfold(const TypeRef& t);
// Iterated head unfolding until the head is not Rec. Terminates on guarded types.
TypeRef full_unfold(const TypeRef& t);

// Coinductive subtyping. Internal choices widen in the subtype, external
// choices widen in the supertype; payloads are contravariant for sends and
// covariant for receives; a singleton-crash external choice only has
// singleton-crash supertypes (pure crash recovery is protected).
bool is_subtype(const TypeRef& a, const TypeRef& b);

// unfold(t) = end, i.e. the endpoint has successfully terminated.
bool sub_end(const TypeRef& t);

// Payload subtyping: sort lifting for basic payloads, is_subtype for sessions.
bool payload_sub(const Payload& a, const Payload& b);

}  // namespace mpst
