#include "cocoon/frontend/lexer.hpp"

#include <array>
#include <charconv>
#include <utility>

namespace cocoon::frontend {

namespace {

constexpr std::array<std::pair<std::string_view, TokenKind>, 13> kKeywords{{
    {"task", TokenKind::KwTask},
    {"i64", TokenKind::KwI64},
    {"void", TokenKind::KwVoid},
    {"let", TokenKind::KwLet},
    {"spawn", TokenKind::KwSpawn},
    {"sync", TokenKind::KwSync},
    {"if", TokenKind::KwIf},
    {"else", TokenKind::KwElse},
    {"while", TokenKind::KwWhile},
    {"for", TokenKind::KwFor},
    {"return", TokenKind::KwReturn},
    {"mem", TokenKind::KwMem},
    {"mem_xchg", TokenKind::KwMemXchg},
}};

bool isIdentStart(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool isDigit(char c) { return c >= '0' && c <= '9'; }
bool isIdentChar(char c) { return isIdentStart(c) || isDigit(c); }
bool isBlank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skipTrivia();
      if (pos_ >= src_.size()) {
        out.push_back(Token{TokenKind::End, src_.substr(pos_, 0),
                            spanFrom(pos_, line_, col_), 0});
        return out;
      }
      out.push_back(next());
    }
  }

private:
  std::string_view src_;
  size_t pos_ = 0;
  uint32_t line_ = 1;
  uint32_t col_ = 1;
  // true while only blanks have been seen since the last newline
  bool atLineStart_ = true;

  Span spanFrom(size_t begin, uint32_t line, uint32_t col) const {
    return Span{line, col, uint32_t(begin), uint32_t(pos_)};
  }

  [[noreturn]] void fail(size_t begin, uint32_t line, uint32_t col,
                         std::string msg) const {
    throw DiagnosticError(Diagnostic{spanFrom(begin, line, col), std::move(msg)});
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
      atLineStart_ = true;
    } else {
      ++col_;
      if (!isBlank(src_[pos_]))
        atLineStart_ = false;
    }
    ++pos_;
  }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skipTrivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (isBlank(c) || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          advance();
      } else if (c == '/' && peek(1) == '*') {
        size_t begin = pos_;
        uint32_t line = line_, col = col_;
        bool wasLineStart = atLineStart_;
        advance();
        advance();
        for (;;) {
          if (pos_ >= src_.size())
            fail(begin, line, col, "unterminated comment");
          if (src_[pos_] == '*' && peek(1) == '/') {
            advance();
            advance();
            break;
          }
          advance();
        }
        // a comment does not end a line's leading whitespace for pragma purposes
        atLineStart_ = wasLineStart && atLineStart_;
      } else {
        return;
      }
    }
  }

  // Matches `word` case-insensitively at the cursor and consumes it.
  bool matchWordCI(std::string_view word) {
    for (size_t i = 0; i < word.size(); ++i)
      if (lower(peek(i)) != word[i])
        return false;
    if (isIdentChar(peek(word.size())))
      return false;
    for (size_t i = 0; i < word.size(); ++i)
      advance();
    return true;
  }

  bool skipBlanks() {
    bool any = false;
    while (pos_ < src_.size() && isBlank(src_[pos_])) {
      advance();
      any = true;
    }
    return any;
  }

  Token lexPragma() {
    size_t begin = pos_;
    uint32_t line = line_, col = col_;
    if (!atLineStart_)
      fail(begin, line, col, "pragma must appear on its own line");
    advance(); // '#'
    skipBlanks();
    bool ok = matchWordCI("pragma") && skipBlanks() && matchWordCI("bombyx") &&
              skipBlanks() && matchWordCI("dae");
    if (!ok) {
      while (pos_ < src_.size() && src_[pos_] != '\n')
        advance();
      fail(begin, line, col,
           "unsupported preprocessor directive (only `#pragma bombyx dae`)");
    }
    size_t textEnd = pos_;
    skipBlanks();
    if (pos_ < src_.size() && src_[pos_] != '\n')
      fail(begin, line, col, "pragma must appear on its own line");
    Token t{TokenKind::PragmaDae, src_.substr(begin, textEnd - begin),
            Span{line, col, uint32_t(begin), uint32_t(textEnd)}, 0};
    return t;
  }

  Token next() {
    size_t begin = pos_;
    uint32_t line = line_, col = col_;
    char c = src_[pos_];

    if (c == '#')
      return lexPragma();

    auto make = [&](TokenKind k) {
      return Token{k, src_.substr(begin, pos_ - begin), spanFrom(begin, line, col), 0};
    };

    if (isIdentStart(c)) {
      while (pos_ < src_.size() && isIdentChar(src_[pos_]))
        advance();
      std::string_view word = src_.substr(begin, pos_ - begin);
      for (auto &[kw, kind] : kKeywords)
        if (kw == word)
          return make(kind);
      return make(TokenKind::Ident);
    }

    if (isDigit(c)) {
      while (pos_ < src_.size() && isIdentChar(src_[pos_]))
        advance();
      std::string_view text = src_.substr(begin, pos_ - begin);
      for (char d : text)
        if (!isDigit(d))
          fail(begin, line, col, "malformed integer literal `" + std::string(text) + "`");
      int64_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec == std::errc::result_out_of_range)
        fail(begin, line, col,
             "integer literal `" + std::string(text) + "` overflows 64-bit signed range");
      if (ec != std::errc() || ptr != text.data() + text.size())
        fail(begin, line, col, "malformed integer literal `" + std::string(text) + "`");
      Token t = make(TokenKind::IntLit);
      t.value = value;
      return t;
    }

    auto two = [&](char second, TokenKind pair, TokenKind single) {
      advance();
      if (peek() == second) {
        advance();
        return make(pair);
      }
      return make(single);
    };

    switch (c) {
    case '(': advance(); return make(TokenKind::LParen);
    case ')': advance(); return make(TokenKind::RParen);
    case '{': advance(); return make(TokenKind::LBrace);
    case '}': advance(); return make(TokenKind::RBrace);
    case '[': advance(); return make(TokenKind::LBracket);
    case ']': advance(); return make(TokenKind::RBracket);
    case ',': advance(); return make(TokenKind::Comma);
    case ';': advance(); return make(TokenKind::Semicolon);
    case '+': advance(); return make(TokenKind::Plus);
    case '-': advance(); return make(TokenKind::Minus);
    case '*': advance(); return make(TokenKind::Star);
    case '/': advance(); return make(TokenKind::Slash);
    case '%': advance(); return make(TokenKind::Percent);
    case '=': return two('=', TokenKind::EqEq, TokenKind::Assign);
    case '!': return two('=', TokenKind::NotEq, TokenKind::Bang);
    case '<': return two('=', TokenKind::LessEq, TokenKind::Less);
    case '>': return two('=', TokenKind::GreaterEq, TokenKind::Greater);
    case '&':
      if (peek(1) == '&') {
        advance();
        advance();
        return make(TokenKind::AndAnd);
      }
      break;
    case '|':
      if (peek(1) == '|') {
        advance();
        advance();
        return make(TokenKind::OrOr);
      }
      break;
    default:
      break;
    }
    // consume a whole UTF-8 sequence so the span covers the character
    advance();
    while (pos_ < src_.size() && (uint8_t(src_[pos_]) & 0xC0) == 0x80)
      advance();
    fail(begin, line, col, "illegal character `" + std::string(src_.substr(begin, pos_ - begin)) + "`");
  }
};

} // namespace

std::string_view spelling(TokenKind kind) {
  switch (kind) {
  case TokenKind::Ident: return "identifier";
  case TokenKind::IntLit: return "integer literal";
  case TokenKind::KwTask: return "`task`";
  case TokenKind::KwI64: return "`i64`";
  case TokenKind::KwVoid: return "`void`";
  case TokenKind::KwLet: return "`let`";
  case TokenKind::KwSpawn: return "`spawn`";
  case TokenKind::KwSync: return "`sync`";
  case TokenKind::KwIf: return "`if`";
  case TokenKind::KwElse: return "`else`";
  case TokenKind::KwWhile: return "`while`";
  case TokenKind::KwFor: return "`for`";
  case TokenKind::KwReturn: return "`return`";
  case TokenKind::KwMem: return "`mem`";
  case TokenKind::KwMemXchg: return "`mem_xchg`";
  case TokenKind::PragmaDae: return "`#pragma bombyx dae`";
  case TokenKind::LParen: return "`(`";
  case TokenKind::RParen: return "`)`";
  case TokenKind::LBrace: return "`{`";
  case TokenKind::RBrace: return "`}`";
  case TokenKind::LBracket: return "`[`";
  case TokenKind::RBracket: return "`]`";
  case TokenKind::Comma: return "`,`";
  case TokenKind::Semicolon: return "`;`";
  case TokenKind::Assign: return "`=`";
  case TokenKind::Plus: return "`+`";
  case TokenKind::Minus: return "`-`";
  case TokenKind::Star: return "`*`";
  case TokenKind::Slash: return "`/`";
  case TokenKind::Percent: return "`%`";
  case TokenKind::EqEq: return "`==`";
  case TokenKind::NotEq: return "`!=`";
  case TokenKind::Less: return "`<`";
  case TokenKind::LessEq: return "`<=`";
  case TokenKind::Greater: return "`>`";
  case TokenKind::GreaterEq: return "`>=`";
  case TokenKind::AndAnd: return "`&&`";
  case TokenKind::OrOr: return "`||`";
  case TokenKind::Bang: return "`!`";
  case TokenKind::End: return "end of input";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

} // namespace cocoon::frontend
