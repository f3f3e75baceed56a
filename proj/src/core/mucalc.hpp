#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "statespace.hpp"

namespace mpst {

// A pattern over transition labels; unset fields match anything.
struct LabelPattern {
  std::optional<ActKind> kind;
  std::optional<std::string> session;
  std::optional<std::string> p;
  std::optional<std::string> q;
  std::optional<std::string> label;
  std::optional<Payload> payload;

  bool matches(const TransitionLabel& l) const;
  std::string render() const;
};

enum class FKind : uint8_t { True, False, Var, And, Or, Implies, Box, Diamond, Lfp, Gfp };

struct Formula;
using FormulaRef = std::shared_ptr<const Formula>;

struct Formula {
  FKind kind;
  int var = -1;                   // Var: de Bruijn index of the fixpoint binder
  std::vector<FormulaRef> kids;   // And/Or: n-ary; Implies: [lhs, rhs]; Box/Diamond/Lfp/Gfp: [body]
  LabelPattern pat;               // Box/Diamond
  std::string var_hint;           // printable name for Lfp/Gfp/Var
};

FormulaRef f_true();
FormulaRef f_false();
FormulaRef f_var(int index, std::string hint = {});
FormulaRef f_and(std::vector<FormulaRef> kids);   // empty = true
FormulaRef f_or(std::vector<FormulaRef> kids);    // empty = false
FormulaRef f_implies(FormulaRef a, FormulaRef b);
FormulaRef f_box(LabelPattern pat, FormulaRef body);
FormulaRef f_diamond(LabelPattern pat, FormulaRef body);
FormulaRef f_lfp(FormulaRef body, std::string hint = {});
FormulaRef f_gfp(FormulaRef body, std::string hint = {});

std::string formula_render(const FormulaRef& f);

// State sets as plain bit vectors over LTS state ids.
using StateSet = std::vector<std::uint64_t>;
StateSet set_make(std::size_t n, bool value);
bool set_get(const StateSet& s, std::size_t i);
void set_put(StateSet& s, std::size_t i, bool v);
bool set_eq(const StateSet& a, const StateSet& b);

// Kleene fixpoint evaluation. Fixpoint variables must occur positively;
// implication antecedents must be closed (checked, not assumed). Closed
// subformulas are evaluated once per call and memoized.
StateSet eval(const Lts& lts, const FormulaRef& f);
bool eval_initial(const Lts& lts, const FormulaRef& f);

enum class PropertyKind : uint8_t { Safe, Df, Term, Nterm, Live };

// The transition-label alphabet of an LTS: distinct labels in edge order.
std::vector<TransitionLabel> lts_alphabet(const Lts& lts);

// Encode a property as a closed formula over the given finite alphabet.
// Data quantifiers are expanded into finite conjunctions/disjunctions here.
FormulaRef encode(PropertyKind prop, const std::vector<TransitionLabel>& alphabet);

}  // namespace mpst
