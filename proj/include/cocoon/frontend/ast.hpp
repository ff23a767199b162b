#pragma once

#include "cocoon/diagnostic.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cocoon::ast {

enum class BinOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp { Neg, Not };

std::string_view spelling(BinOp op);
std::string_view spelling(UnOp op);
/// C precedence level; larger binds tighter.
int precedence(BinOp op);

struct Expr;
/// Expressions are immutable once built and freely shared between the AST and
/// every IR derived from it.
using ExprPtr = std::shared_ptr<const Expr>;

struct IntLit {
  int64_t value;
};
struct Var {
  std::string name;
};
struct Binary {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Unary {
  UnOp op;
  ExprPtr operand;
};
struct MemLoad {
  ExprPtr addr;
};
struct MemXchg {
  ExprPtr addr;
  ExprPtr value;
};

struct Expr {
  std::variant<IntLit, Var, Binary, Unary, MemLoad, MemXchg> node;
  Span span;
};

ExprPtr makeInt(int64_t v, Span span = {});
ExprPtr makeVar(std::string name, Span span = {});
ExprPtr makeBinary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span span = {});

struct Stmt;
using Block = std::vector<Stmt>;

struct Let {
  std::string name;
  ExprPtr value;
};
struct Assign {
  std::string name;
  ExprPtr value;
};
/// `x = spawn f(args);` or, with `declares`, `let x = spawn f(args);`
struct SpawnAssign {
  std::string dest;
  bool declares = false;
  std::string callee;
  std::vector<ExprPtr> args;
};
struct SpawnVoid {
  std::string callee;
  std::vector<ExprPtr> args;
};
struct Sync {};
struct If {
  ExprPtr cond;
  Block then_block;
  Block else_block;
};
struct While {
  ExprPtr cond;
  Block body;
};
struct Return {
  ExprPtr value; // null for `return;`
};
struct MemStore {
  ExprPtr addr;
  ExprPtr value;
};
struct DaePragma {
  std::shared_ptr<const Stmt> inner;
};

struct Stmt {
  std::variant<Let, Assign, SpawnAssign, SpawnVoid, Sync, If, While, Return, MemStore,
               DaePragma>
      node;
  Span span;
};

struct Param {
  std::string name;
  Span span;
};

struct FunctionDecl {
  std::string name;
  std::vector<Param> params;
  bool returns_value = false;
  bool is_task = false;
  Block body;
  Span span;
};

struct Program {
  std::vector<FunctionDecl> functions;
  std::string entry;

  const FunctionDecl *find(std::string_view name) const;
};

/// Structural equality; spans are ignored.
bool equal(const Expr &a, const Expr &b);
bool equal(const Stmt &a, const Stmt &b);
bool equal(const Block &a, const Block &b);
bool equal(const Program &a, const Program &b);

/// Variables read by `e`, in first-occurrence order, without duplicates.
std::vector<std::string> freeVars(const Expr &e);
void collectVars(const Expr &e, std::vector<std::string> &out);
bool containsMemoryAccess(const Expr &e);

} // namespace cocoon::ast
