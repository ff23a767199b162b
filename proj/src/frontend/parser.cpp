#include "cocoon/frontend/parser.hpp"

#include <initializer_list>
#include <optional>

namespace cocoon::frontend {

namespace {

using namespace cocoon::ast;

Span join(Span a, Span b) { return Span{a.line, a.column, a.begin, b.end}; }

class Parser {
public:
  explicit Parser(std::span<const Token> toks) : toks_(toks) {
    if (toks_.empty() || toks_.back().kind != TokenKind::End)
      throw InternalError("token stream must end with an End token");
  }

  Program program() {
    Program p;
    do {
      p.functions.push_back(function());
    } while (!at(TokenKind::End));
    p.entry = p.find("main") ? "main" : p.functions.front().name;
    return p;
  }

private:
  std::span<const Token> toks_;
  size_t pos_ = 0;
  Span lastSpan_{};

  const Token &cur() const { return toks_[pos_]; }
  const Token &ahead(size_t n) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  bool at(TokenKind k) const { return cur().kind == k; }

  const Token &take() {
    const Token &t = toks_[pos_];
    lastSpan_ = t.span;
    if (t.kind != TokenKind::End)
      ++pos_;
    return t;
  }

  bool accept(TokenKind k) {
    if (!at(k))
      return false;
    take();
    return true;
  }

  [[noreturn]] void expected(std::initializer_list<TokenKind> set) const {
    std::string msg = "expected ";
    size_t i = 0;
    for (TokenKind k : set) {
      if (i > 0)
        msg += (i + 1 == set.size()) ? " or " : ", ";
      msg += spelling(k);
      ++i;
    }
    msg += ", found ";
    msg += cur().kind == TokenKind::End ? std::string("end of input")
                                        : "`" + std::string(cur().text) + "`";
    throw DiagnosticError(Diagnostic{cur().span, msg});
  }

  [[noreturn]] void error(Span span, std::string msg) const {
    throw DiagnosticError(Diagnostic{span, std::move(msg)});
  }

  const Token &expect(TokenKind k) {
    if (!at(k))
      expected({k});
    return take();
  }

  FunctionDecl function() {
    if (at(TokenKind::KwSync) || at(TokenKind::KwSpawn))
      error(cur().span, std::string(spelling(cur().kind)) + " outside a function body");
    FunctionDecl fn;
    Span start = cur().span;
    fn.is_task = accept(TokenKind::KwTask);
    if (accept(TokenKind::KwI64))
      fn.returns_value = true;
    else if (!accept(TokenKind::KwVoid))
      fn.is_task ? expected({TokenKind::KwI64, TokenKind::KwVoid})
                 : expected({TokenKind::KwTask, TokenKind::KwI64, TokenKind::KwVoid});
    fn.name = std::string(expect(TokenKind::Ident).text);
    expect(TokenKind::LParen);
    if (!at(TokenKind::RParen)) {
      do {
        expect(TokenKind::KwI64);
        const Token &id = expect(TokenKind::Ident);
        fn.params.push_back(Param{std::string(id.text), id.span});
      } while (accept(TokenKind::Comma));
    }
    expect(TokenKind::RParen);
    fn.span = join(start, lastSpan_);
    fn.body = block();
    return fn;
  }

  Block block() {
    expect(TokenKind::LBrace);
    Block b;
    while (!at(TokenKind::RBrace)) {
      if (at(TokenKind::End))
        expected({TokenKind::RBrace});
      statement(b);
    }
    take();
    return b;
  }

  std::vector<ExprPtr> callArgs() {
    std::vector<ExprPtr> args;
    expect(TokenKind::LParen);
    if (!at(TokenKind::RParen)) {
      do {
        args.push_back(expr());
      } while (accept(TokenKind::Comma));
    }
    expect(TokenKind::RParen);
    return args;
  }

  // `spawn f(args)` after the `spawn` keyword has been seen at cur().
  std::pair<std::string, std::vector<ExprPtr>> spawnCall() {
    expect(TokenKind::KwSpawn);
    std::string callee(expect(TokenKind::Ident).text);
    return {callee, callArgs()};
  }

  // Statements that may appear without a trailing semicolon (`for` steps).
  std::optional<Stmt> simpleStatement(bool allowLet) {
    Span start = cur().span;
    if (allowLet && accept(TokenKind::KwLet)) {
      std::string name(expect(TokenKind::Ident).text);
      expect(TokenKind::Assign);
      if (at(TokenKind::KwSpawn)) {
        auto [callee, args] = spawnCall();
        return Stmt{SpawnAssign{name, true, callee, std::move(args)}, join(start, lastSpan_)};
      }
      ExprPtr v = expr();
      return Stmt{Let{name, v}, join(start, lastSpan_)};
    }
    if (at(TokenKind::Ident) && ahead(1).kind == TokenKind::Assign) {
      std::string name(take().text);
      take();
      if (at(TokenKind::KwSpawn)) {
        auto [callee, args] = spawnCall();
        return Stmt{SpawnAssign{name, false, callee, std::move(args)}, join(start, lastSpan_)};
      }
      ExprPtr v = expr();
      return Stmt{Assign{name, v}, join(start, lastSpan_)};
    }
    if (at(TokenKind::KwMem) && ahead(1).kind == TokenKind::LBracket) {
      take();
      take();
      ExprPtr addr = expr();
      expect(TokenKind::RBracket);
      expect(TokenKind::Assign);
      ExprPtr v = expr();
      return Stmt{MemStore{addr, v}, join(start, lastSpan_)};
    }
    return std::nullopt;
  }

  void statement(Block &out) {
    Span start = cur().span;
    switch (cur().kind) {
    case TokenKind::PragmaDae: {
      take();
      if (at(TokenKind::PragmaDae))
        error(cur().span, "nested DAE pragma");
      Block inner;
      statement(inner);
      if (inner.size() != 1)
        error(start, "DAE pragma must precede a single statement");
      Span s = join(start, inner.front().span);
      out.push_back(Stmt{DaePragma{std::make_shared<const Stmt>(std::move(inner.front()))}, s});
      return;
    }
    case TokenKind::KwSpawn: {
      auto [callee, args] = spawnCall();
      expect(TokenKind::Semicolon);
      out.push_back(Stmt{SpawnVoid{callee, std::move(args)}, join(start, lastSpan_)});
      return;
    }
    case TokenKind::KwSync:
      take();
      expect(TokenKind::Semicolon);
      out.push_back(Stmt{Sync{}, join(start, lastSpan_)});
      return;
    case TokenKind::KwReturn: {
      take();
      ExprPtr v;
      if (!at(TokenKind::Semicolon))
        v = expr();
      expect(TokenKind::Semicolon);
      out.push_back(Stmt{Return{v}, join(start, lastSpan_)});
      return;
    }
    case TokenKind::KwIf:
      out.push_back(ifStatement());
      return;
    case TokenKind::KwWhile: {
      take();
      expect(TokenKind::LParen);
      ExprPtr c = expr();
      expect(TokenKind::RParen);
      Span head = join(start, lastSpan_);
      out.push_back(Stmt{While{c, block()}, head});
      return;
    }
    case TokenKind::KwFor:
      forStatement(out);
      return;
    default:
      break;
    }
    if (auto s = simpleStatement(true)) {
      expect(TokenKind::Semicolon);
      s->span = join(s->span, lastSpan_);
      out.push_back(std::move(*s));
      return;
    }
    expected({TokenKind::KwLet, TokenKind::Ident, TokenKind::KwSpawn, TokenKind::KwSync,
              TokenKind::KwIf, TokenKind::KwWhile, TokenKind::KwFor, TokenKind::KwReturn,
              TokenKind::KwMem, TokenKind::PragmaDae, TokenKind::RBrace});
  }

  Stmt ifStatement() {
    Span start = cur().span;
    expect(TokenKind::KwIf);
    expect(TokenKind::LParen);
    ExprPtr c = expr();
    expect(TokenKind::RParen);
    Span head = join(start, lastSpan_);
    If node{c, block(), {}};
    if (accept(TokenKind::KwElse)) {
      if (at(TokenKind::KwIf))
        node.else_block.push_back(ifStatement());
      else
        node.else_block = block();
    }
    return Stmt{std::move(node), head};
  }

  // for (init; cond; step) body  =>  init; while (cond) { body; step; }
  void forStatement(Block &out) {
    Span start = cur().span;
    take();
    expect(TokenKind::LParen);
    auto init = simpleStatement(true);
    if (!init)
      expected({TokenKind::KwLet, TokenKind::Ident, TokenKind::KwMem});
    expect(TokenKind::Semicolon);
    init->span = join(init->span, lastSpan_);
    ExprPtr c = expr();
    expect(TokenKind::Semicolon);
    auto step = simpleStatement(false);
    if (!step)
      expected({TokenKind::Ident, TokenKind::KwMem});
    if (std::holds_alternative<SpawnAssign>(step->node))
      error(step->span, "`spawn` is not allowed in a for-loop step");
    expect(TokenKind::RParen);
    Span head = join(start, lastSpan_);
    Block body = block();
    body.push_back(std::move(*step));
    out.push_back(std::move(*init));
    out.push_back(Stmt{While{c, std::move(body)}, head});
  }

  // ---- expressions, C precedence ----

  std::optional<BinOp> binop(TokenKind k) const {
    switch (k) {
    case TokenKind::OrOr: return BinOp::Or;
    case TokenKind::AndAnd: return BinOp::And;
    case TokenKind::EqEq: return BinOp::Eq;
    case TokenKind::NotEq: return BinOp::Ne;
    case TokenKind::Less: return BinOp::Lt;
    case TokenKind::LessEq: return BinOp::Le;
    case TokenKind::Greater: return BinOp::Gt;
    case TokenKind::GreaterEq: return BinOp::Ge;
    case TokenKind::Plus: return BinOp::Add;
    case TokenKind::Minus: return BinOp::Sub;
    case TokenKind::Star: return BinOp::Mul;
    case TokenKind::Slash: return BinOp::Div;
    case TokenKind::Percent: return BinOp::Mod;
    default: return std::nullopt;
    }
  }

  ExprPtr expr(int minPrec = 1) {
    ExprPtr lhs = unary();
    for (;;) {
      auto op = binop(cur().kind);
      if (!op || precedence(*op) < minPrec)
        return lhs;
      take();
      ExprPtr rhs = expr(precedence(*op) + 1);
      Span s = join(lhs->span, rhs->span);
      lhs = std::make_shared<const Expr>(Expr{Binary{*op, lhs, rhs}, s});
    }
  }

  ExprPtr unary() {
    Span start = cur().span;
    if (accept(TokenKind::Minus)) {
      ExprPtr e = unary();
      return std::make_shared<const Expr>(Expr{Unary{UnOp::Neg, e}, join(start, e->span)});
    }
    if (accept(TokenKind::Bang)) {
      ExprPtr e = unary();
      return std::make_shared<const Expr>(Expr{Unary{UnOp::Not, e}, join(start, e->span)});
    }
    return primary();
  }

  ExprPtr primary() {
    Span start = cur().span;
    switch (cur().kind) {
    case TokenKind::IntLit: {
      const Token &t = take();
      return std::make_shared<const Expr>(Expr{IntLit{t.value}, t.span});
    }
    case TokenKind::Ident: {
      const Token &t = take();
      if (at(TokenKind::LParen))
        error(join(start, cur().span),
              "function calls are not expressions; use `spawn` followed by `sync`");
      return std::make_shared<const Expr>(Expr{Var{std::string(t.text)}, t.span});
    }
    case TokenKind::LParen: {
      take();
      ExprPtr e = expr();
      expect(TokenKind::RParen);
      return e;
    }
    case TokenKind::KwMem: {
      take();
      expect(TokenKind::LBracket);
      ExprPtr a = expr();
      expect(TokenKind::RBracket);
      return std::make_shared<const Expr>(Expr{MemLoad{a}, join(start, lastSpan_)});
    }
    case TokenKind::KwMemXchg: {
      take();
      expect(TokenKind::LParen);
      ExprPtr a = expr();
      expect(TokenKind::Comma);
      ExprPtr v = expr();
      expect(TokenKind::RParen);
      return std::make_shared<const Expr>(Expr{MemXchg{a, v}, join(start, lastSpan_)});
    }
    case TokenKind::KwSpawn:
      error(cur().span, "`spawn` must be the entire right-hand side of an assignment");
    default:
      expected({TokenKind::IntLit, TokenKind::Ident, TokenKind::LParen, TokenKind::KwMem,
                TokenKind::KwMemXchg, TokenKind::Minus, TokenKind::Bang});
    }
  }
};

} // namespace

ast::Program parse(std::span<const Token> tokens) { return Parser(tokens).program(); }

ast::Program parseSource(std::string_view source) {
  auto toks = tokenize(source);
  return parse(toks);
}

} // namespace cocoon::frontend
