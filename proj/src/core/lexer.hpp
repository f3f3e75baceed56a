#pragma once

// Shared tokenizer for the .mpst and .proc surface syntaxes. `#` starts a
// comment running to end of line.

#include <cctype>
#include <optional>
#include <string>
#include <vector>

namespace mpst::lex {

enum class Tok : uint8_t {
  Ident,   // identifiers and keywords
  Int,     // digits
  Real,    // digits '.' digits
  Str,     // "..." with \" and \\ escapes
  Punct,   // one of ! ? . , = | : [ ] { } ( )
  End,     // end of input
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

struct Lexer {
  std::string error;  // set on bad input
  int err_line = 0, err_col = 0;
  std::vector<Token> toks;

  bool run(const std::string& text) {
    int line = 1, col = 1;
    std::size_t i = 0;
    auto bump = [&](char c) {
      if (c == '\n') { line++; col = 1; } else { col++; }
    };
    while (i < text.size()) {
      char c = text[i];
      if (c == '#') {
        while (i < text.size() && text[i] != '\n') { bump(text[i]); i++; }
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) { bump(c); i++; continue; }
      int tl = line, tc = col;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string w;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
          w += text[i]; bump(text[i]); i++;
        }
        toks.push_back({Tok::Ident, std::move(w), tl, tc});
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '-' && i + 1 < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
        std::string w;
        if (c == '-') { w += c; bump(c); i++; }
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
          w += text[i]; bump(text[i]); i++;
        }
        bool real = false;
        if (i + 1 < text.size() && text[i] == '.' &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
          real = true;
          w += '.'; bump('.'); i++;
          while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            w += text[i]; bump(text[i]); i++;
          }
        }
        toks.push_back({real ? Tok::Real : Tok::Int, std::move(w), tl, tc});
        continue;
      }
      if (c == '"') {
        std::string w;
        bump(c); i++;
        bool closed = false;
        while (i < text.size()) {
          char d = text[i];
          if (d == '\\' && i + 1 < text.size()) {
            w += text[i + 1];
            bump(d); i++;
            bump(text[i]); i++;
            continue;
          }
          if (d == '"') { bump(d); i++; closed = true; break; }
          if (d == '\n') break;
          w += d; bump(d); i++;
        }
        if (!closed) {
          error = "unterminated string literal";
          err_line = tl; err_col = tc;
          return false;
        }
        toks.push_back({Tok::Str, std::move(w), tl, tc});
        continue;
      }
      static const std::string punct = "!?.,=|:[]{}()";
      if (punct.find(c) != std::string::npos) {
        toks.push_back({Tok::Punct, std::string(1, c), tl, tc});
        bump(c); i++;
        continue;
      }
      error = std::string("unexpected character '") + c + "'";
      err_line = tl; err_col = tc;
      return false;
    }
    toks.push_back({Tok::End, "", line, col});
    return true;
  }
};

}  // namespace mpst::lex
