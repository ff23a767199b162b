#pragma once

#include "cocoon/diagnostic.hpp"

#include <string_view>
#include <vector>

namespace cocoon::frontend {

enum class TokenKind {
  Ident,
  IntLit,
  // keywords
  KwTask,
  KwI64,
  KwVoid,
  KwLet,
  KwSpawn,
  KwSync,
  KwIf,
  KwElse,
  KwWhile,
  KwFor,
  KwReturn,
  KwMem,
  KwMemXchg,
  // `#pragma bombyx dae`, one token
  PragmaDae,
  // punctuation
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Semicolon,
  Assign,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  EqEq,
  NotEq,
  Less,
  LessEq,
  Greater,
  GreaterEq,
  AndAnd,
  OrOr,
  Bang,
  End,
};

/// Human-readable spelling, used in "expected ..." messages.
std::string_view spelling(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string_view text; // slice of the source buffer
  Span span;
  int64_t value = 0; // IntLit only
};

/// Splits `source` into tokens, ending with a single End token whose span is
/// empty and sits at the end of the input. Throws DiagnosticError on the first
/// lexical error. The returned views alias `source`.
std::vector<Token> tokenize(std::string_view source);

} // namespace cocoon::frontend
