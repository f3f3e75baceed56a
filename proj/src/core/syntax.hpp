#pragma once

#include <string>
#include <variant>
#include <vector>

#include "context.hpp"
#include "process.hpp"
#include "types.hpp"

namespace mpst {

struct ParseError {
  std::string message;
  int line = 0;  // 1-based
  int col = 0;   // 1-based

  std::string render() const {
    return std::to_string(line) + ":" + std::to_string(col) + ": " + message;
  }
};

// A parsed .mpst file: one session, an optional reliability declaration, and
// one type binding per endpoint.
struct ContextDocument {
  std::string session;
  std::vector<std::string> reliable;
  std::vector<std::pair<Endpoint, TypeRef>> bindings;  // written order

  Context to_context() const;
};

std::variant<ContextDocument, ParseError> parse_context(const std::string& text);

// Post-parse validation: endpoint distinctness, reliable roles among binding
// roles, per-binding type well-formedness. Empty = valid.
std::vector<std::string> validate_context(const ContextDocument& doc);

std::string print_context(const ContextDocument& doc);
std::string print_type(const TypeRef& t);

// A parsed .proc file: a process term plus the (currently always empty)
// ambient signature environment for named definitions.
struct ProcessDocument {
  DefSigs sigs;
  ProcRef proc;
};

std::variant<ProcessDocument, ParseError> parse_process(const std::string& text);

std::string print_process(const ProcRef& p);

}  // namespace mpst
