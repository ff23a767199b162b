#pragma once

#include "cocoon/frontend/ast.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cocoon::ir {

using BlockId = uint32_t;
using ast::ExprPtr;

struct Let {
  std::string name;
  ExprPtr value;
};
struct Assign {
  std::string name;
  ExprPtr value;
};
struct SpawnAssign {
  std::string dest;
  std::string callee;
  std::vector<ExprPtr> args;
};
struct SpawnVoid {
  std::string callee;
  std::vector<ExprPtr> args;
};
struct MemStore {
  ExprPtr addr;
  ExprPtr value;
};

/// A straight-line statement. `dae` marks a statement that carried the DAE
/// pragma and has not been split out yet.
struct Stmt {
  std::variant<Let, Assign, SpawnAssign, SpawnVoid, MemStore> node;
  Span span;
  bool dae = false;
};

struct IfTerm {
  ExprPtr cond;
  BlockId then_block;
  BlockId else_block;
};
struct GotoTerm {
  BlockId target;
};
/// Loop header: evaluates `cond` and enters `body` or leaves to `exit`.
struct WhileTerm {
  ExprPtr cond;
  BlockId body;
  BlockId exit;
};
struct ReturnTerm {
  ExprPtr value; // null in void functions
};
struct SyncTerm {
  BlockId next;
};

struct Terminator {
  std::variant<IfTerm, GotoTerm, WhileTerm, ReturnTerm, SyncTerm> node;
  Span span;
};

struct BasicBlock {
  BlockId id = 0;
  std::vector<Stmt> stmts;
  Terminator term;
};

struct ImplicitFunction {
  std::string name;
  std::vector<std::string> params;
  bool returns_value = false;
  bool is_task = false;
  std::vector<BasicBlock> blocks; // blocks[i].id == i
  BlockId entry = 0;
  Span span;

  const BasicBlock &block(BlockId id) const { return blocks.at(id); }
};

struct ImplicitProgram {
  std::vector<ImplicitFunction> functions;
  std::string entry;

  const ImplicitFunction *find(std::string_view name) const;
};

/// Successor ids in a fixed order: then/else, body/exit, target, next.
std::vector<BlockId> successors(const Terminator &t);

/// Variables read by a statement, first-occurrence order, no duplicates.
/// MemStore reads its address before its value.
std::vector<std::string> uses(const Stmt &s);
/// The variable a statement writes, if any.
std::optional<std::string> definition(const Stmt &s);
std::vector<std::string> uses(const Terminator &t);

/// Builds the CFG of one function. The function must come from a validated,
/// normalized program; statements after a return are dropped.
ImplicitFunction buildCfg(const ast::FunctionDecl &fn);

/// normalize + buildCfg for every function, preserving declaration order.
ImplicitProgram buildProgram(const ast::Program &program);

/// Structural equality; spans are ignored.
bool equal(const ImplicitFunction &a, const ImplicitFunction &b);
bool equal(const ImplicitProgram &a, const ImplicitProgram &b);

/// Textual CFG: one paragraph per block, `T:` marks the terminator.
std::string dump(const ImplicitFunction &fn);
std::string dump(const ImplicitProgram &program);

} // namespace cocoon::ir
