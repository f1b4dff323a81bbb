#pragma once

// Shared tokenizer for functor terms and coalgebra bodies.

#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "corefine/errors.hpp"

namespace corefine {

struct Tok {
  enum Kind : uint8_t {
    Ident,
    Nat,      // pure digits
    Decimal,  // digits '.' digits (text holds the full literal)
    Hex,      // 0x...
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Plus,
    Minus,
    Caret,
    Slash,
    End,
  };
  Kind kind;
  std::string text;
  size_t col;  // 0-based offset into the source line, for error messages
};

inline std::vector<Tok> lex_line(const std::string& s, size_t line_no) {
  std::vector<Tok> out;
  size_t i = 0;
  const size_t n = s.size();
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < n) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      i++;
      continue;
    }
    size_t start = i;
    if (is_ident_start(c)) {
      size_t j = i;
      while (j < n && is_ident_char(s[j])) j++;
      out.push_back({Tok::Ident, s.substr(i, j - i), start});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (c == '0' && i + 1 < n && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        size_t j = i + 2;
        while (j < n && std::isxdigit(static_cast<unsigned char>(s[j]))) j++;
        if (j == i + 2) throw ParseError("malformed hex literal", line_no);
        out.push_back({Tok::Hex, s.substr(i, j - i), start});
        i = j;
        continue;
      }
      size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) j++;
      if (j < n && s[j] == '.' && j + 1 < n && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        j++;
        while (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) j++;
        out.push_back({Tok::Decimal, s.substr(i, j - i), start});
      } else {
        out.push_back({Tok::Nat, s.substr(i, j - i), start});
      }
      i = j;
      continue;
    }
    Tok::Kind k;
    switch (c) {
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '^': k = Tok::Caret; break;
      case '/': k = Tok::Slash; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "' at column " +
                             std::to_string(start + 1),
                         line_no);
    }
    out.push_back({k, std::string(1, c), start});
    i++;
  }
  out.push_back({Tok::End, "", n});
  return out;
}

}  // namespace corefine
