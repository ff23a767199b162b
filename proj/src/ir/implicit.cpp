#include "cocoon/ir/implicit.hpp"
#include "cocoon/frontend/printer.hpp"
#include "cocoon/frontend/sema.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>

namespace cocoon::ir {

const ImplicitFunction *ImplicitProgram::find(std::string_view name) const {
  for (auto &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

std::vector<BlockId> successors(const Terminator &t) {
  return std::visit(Overloaded{
                        [](const IfTerm &x) { return std::vector<BlockId>{x.then_block, x.else_block}; },
                        [](const GotoTerm &x) { return std::vector<BlockId>{x.target}; },
                        [](const WhileTerm &x) { return std::vector<BlockId>{x.body, x.exit}; },
                        [](const ReturnTerm &) { return std::vector<BlockId>{}; },
                        [](const SyncTerm &x) { return std::vector<BlockId>{x.next}; },
                    },
                    t.node);
}

namespace {

void addUses(const ast::Expr &e, std::vector<std::string> &out) {
  for (auto &v : ast::freeVars(e))
    if (std::find(out.begin(), out.end(), v) == out.end())
      out.push_back(v);
}

} // namespace

std::vector<std::string> uses(const Stmt &s) {
  std::vector<std::string> out;
  std::visit(Overloaded{
                 [&](const Let &x) { addUses(*x.value, out); },
                 [&](const Assign &x) { addUses(*x.value, out); },
                 [&](const SpawnAssign &x) {
                   for (auto &a : x.args)
                     addUses(*a, out);
                 },
                 [&](const SpawnVoid &x) {
                   for (auto &a : x.args)
                     addUses(*a, out);
                 },
                 [&](const MemStore &x) {
                   addUses(*x.addr, out);
                   addUses(*x.value, out);
                 },
             },
             s.node);
  return out;
}

std::optional<std::string> definition(const Stmt &s) {
  return std::visit(Overloaded{
                        [](const Let &x) -> std::optional<std::string> { return x.name; },
                        [](const Assign &x) -> std::optional<std::string> { return x.name; },
                        [](const SpawnAssign &x) -> std::optional<std::string> { return x.dest; },
                        [](const auto &) -> std::optional<std::string> { return std::nullopt; },
                    },
                    s.node);
}

std::vector<std::string> uses(const Terminator &t) {
  std::vector<std::string> out;
  std::visit(Overloaded{
                 [&](const IfTerm &x) { addUses(*x.cond, out); },
                 [&](const WhileTerm &x) { addUses(*x.cond, out); },
                 [&](const ReturnTerm &x) {
                   if (x.value)
                     addUses(*x.value, out);
                 },
                 [](const auto &) {},
             },
             t.node);
  return out;
}

namespace {

class CfgBuilder {
public:
  explicit CfgBuilder(const ast::FunctionDecl &fn) : fn_(fn) {}

  ImplicitFunction build() {
    cur_ = newBlock();
    block(fn_.body);
    if (cur_) {
      if (fn_.returns_value)
        throw InternalError("value function `" + fn_.name + "` falls off its end");
      finish(*cur_, Terminator{ReturnTerm{nullptr}, fn_.span});
    }
    ImplicitFunction out;
    out.name = fn_.name;
    for (auto &p : fn_.params)
      out.params.push_back(p.name);
    out.returns_value = fn_.returns_value;
    out.is_task = fn_.is_task;
    out.span = fn_.span;
    for (size_t i = 0; i < blocks_.size(); ++i) {
      if (!terms_[i])
        throw InternalError("block without terminator in `" + fn_.name + "`");
      blocks_[i].term = std::move(*terms_[i]);
      out.blocks.push_back(std::move(blocks_[i]));
    }
    return out;
  }

private:
  const ast::FunctionDecl &fn_;
  std::vector<BasicBlock> blocks_;
  std::vector<std::optional<Terminator>> terms_;
  std::optional<BlockId> cur_;

  BlockId newBlock() {
    BlockId id = BlockId(blocks_.size());
    blocks_.push_back(BasicBlock{id, {}, {}});
    terms_.emplace_back();
    return id;
  }

  void finish(BlockId b, Terminator t) {
    terms_[b] = std::move(t);
    if (cur_ == b)
      cur_.reset();
  }

  void emit(Stmt s) {
    if (cur_)
      blocks_[*cur_].stmts.push_back(std::move(s));
  }

  void block(const ast::Block &b) {
    for (auto &s : b) {
      if (!cur_)
        return;
      stmt(s, false);
    }
  }

  void stmt(const ast::Stmt &s, bool dae) {
    std::visit(Overloaded{
                   [&](const ast::Let &x) { emit(Stmt{Let{x.name, x.value}, s.span, dae}); },
                   [&](const ast::Assign &x) { emit(Stmt{Assign{x.name, x.value}, s.span, dae}); },
                   [&](const ast::SpawnAssign &x) {
                     emit(Stmt{SpawnAssign{x.dest, x.callee, x.args}, s.span, dae});
                   },
                   [&](const ast::SpawnVoid &x) {
                     emit(Stmt{SpawnVoid{x.callee, x.args}, s.span, dae});
                   },
                   [&](const ast::MemStore &x) {
                     emit(Stmt{MemStore{x.addr, x.value}, s.span, dae});
                   },
                   [&](const ast::DaePragma &x) { stmt(*x.inner, true); },
                   [&](const ast::Sync &) {
                     BlockId from = *cur_;
                     BlockId next = newBlock();
                     finish(from, Terminator{SyncTerm{next}, s.span});
                     cur_ = next;
                   },
                   [&](const ast::Return &x) {
                     finish(*cur_, Terminator{ReturnTerm{x.value}, s.span});
                   },
                   [&](const ast::If &x) { ifStmt(x, s.span); },
                   [&](const ast::While &x) { whileStmt(x, s.span); },
               },
               s.node);
  }

  void ifStmt(const ast::If &x, Span span) {
    BlockId head = *cur_;
    BlockId thenB = newBlock();
    cur_ = thenB;
    block(x.then_block);
    auto thenEnd = cur_;

    std::optional<BlockId> elseB, elseEnd;
    if (!x.else_block.empty()) {
      elseB = newBlock();
      cur_ = *elseB;
      block(x.else_block);
      elseEnd = cur_;
    }

    std::optional<BlockId> join;
    if (thenEnd || elseEnd || !elseB)
      join = newBlock();
    if (thenEnd)
      finish(*thenEnd, Terminator{GotoTerm{*join}, span});
    if (elseEnd)
      finish(*elseEnd, Terminator{GotoTerm{*join}, span});
    terms_[head] = Terminator{IfTerm{x.cond, thenB, elseB ? *elseB : *join}, span};
    cur_ = join;
  }

  void whileStmt(const ast::While &x, Span span) {
    BlockId header = newBlock();
    finish(*cur_, Terminator{GotoTerm{header}, span});
    BlockId body = newBlock();
    cur_ = body;
    block(x.body);
    if (cur_)
      finish(*cur_, Terminator{GotoTerm{header}, span});
    BlockId exit = newBlock();
    terms_[header] = Terminator{WhileTerm{x.cond, body, exit}, span};
    cur_ = exit;
  }
};

bool equalExpr(const ExprPtr &a, const ExprPtr &b) {
  if (!a || !b)
    return !a && !b;
  return ast::equal(*a, *b);
}

bool equalArgs(const std::vector<ExprPtr> &a, const std::vector<ExprPtr> &b) {
  if (a.size() != b.size())
    return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!equalExpr(a[i], b[i]))
      return false;
  return true;
}

bool equalStmt(const Stmt &a, const Stmt &b) {
  if (a.dae != b.dae || a.node.index() != b.node.index())
    return false;
  return std::visit(
      Overloaded{
          [&](const Let &x) {
            auto &y = std::get<Let>(b.node);
            return x.name == y.name && equalExpr(x.value, y.value);
          },
          [&](const Assign &x) {
            auto &y = std::get<Assign>(b.node);
            return x.name == y.name && equalExpr(x.value, y.value);
          },
          [&](const SpawnAssign &x) {
            auto &y = std::get<SpawnAssign>(b.node);
            return x.dest == y.dest && x.callee == y.callee && equalArgs(x.args, y.args);
          },
          [&](const SpawnVoid &x) {
            auto &y = std::get<SpawnVoid>(b.node);
            return x.callee == y.callee && equalArgs(x.args, y.args);
          },
          [&](const MemStore &x) {
            auto &y = std::get<MemStore>(b.node);
            return equalExpr(x.addr, y.addr) && equalExpr(x.value, y.value);
          },
      },
      a.node);
}

bool equalTerm(const Terminator &a, const Terminator &b) {
  if (a.node.index() != b.node.index())
    return false;
  return std::visit(
      Overloaded{
          [&](const IfTerm &x) {
            auto &y = std::get<IfTerm>(b.node);
            return equalExpr(x.cond, y.cond) && x.then_block == y.then_block &&
                   x.else_block == y.else_block;
          },
          [&](const GotoTerm &x) { return x.target == std::get<GotoTerm>(b.node).target; },
          [&](const WhileTerm &x) {
            auto &y = std::get<WhileTerm>(b.node);
            return equalExpr(x.cond, y.cond) && x.body == y.body && x.exit == y.exit;
          },
          [&](const ReturnTerm &x) { return equalExpr(x.value, std::get<ReturnTerm>(b.node).value); },
          [&](const SyncTerm &x) { return x.next == std::get<SyncTerm>(b.node).next; },
      },
      a.node);
}

std::string args(const std::vector<ExprPtr> &as) {
  std::string out;
  for (size_t i = 0; i < as.size(); ++i)
    out += (i ? ", " : "") + frontend::printExpr(*as[i]);
  return out;
}

std::string stmtText(const Stmt &s) {
  std::string body = std::visit(
      Overloaded{
          [](const Let &x) { return "let " + x.name + " = " + frontend::printExpr(*x.value); },
          [](const Assign &x) { return x.name + " = " + frontend::printExpr(*x.value); },
          [](const SpawnAssign &x) {
            return x.dest + " = spawn " + x.callee + "(" + args(x.args) + ")";
          },
          [](const SpawnVoid &x) { return "spawn " + x.callee + "(" + args(x.args) + ")"; },
          [](const MemStore &x) {
            return "mem[" + frontend::printExpr(*x.addr) + "] = " + frontend::printExpr(*x.value);
          },
      },
      s.node);
  return s.dae ? "[dae] " + body : body;
}

std::string termText(const Terminator &t) {
  return std::visit(
      Overloaded{
          [](const IfTerm &x) {
            return "if " + frontend::printExpr(*x.cond) + " then b" + std::to_string(x.then_block) +
                   " else b" + std::to_string(x.else_block);
          },
          [](const GotoTerm &x) { return "goto b" + std::to_string(x.target); },
          [](const WhileTerm &x) {
            return "while " + frontend::printExpr(*x.cond) + " do b" + std::to_string(x.body) +
                   " exit b" + std::to_string(x.exit);
          },
          [](const ReturnTerm &x) {
            return x.value ? "return " + frontend::printExpr(*x.value) : std::string("return");
          },
          [](const SyncTerm &x) { return "sync -> b" + std::to_string(x.next); },
      },
      t.node);
}

} // namespace

ImplicitFunction buildCfg(const ast::FunctionDecl &fn) { return CfgBuilder(fn).build(); }

ImplicitProgram buildProgram(const ast::Program &program) {
  ast::Program normalized = frontend::normalize(program);
  ImplicitProgram out;
  out.entry = normalized.entry;
  for (auto &f : normalized.functions)
    out.functions.push_back(buildCfg(f));
  return out;
}

bool equal(const ImplicitFunction &a, const ImplicitFunction &b) {
  if (a.name != b.name || a.params != b.params || a.returns_value != b.returns_value ||
      a.is_task != b.is_task || a.entry != b.entry || a.blocks.size() != b.blocks.size())
    return false;
  for (size_t i = 0; i < a.blocks.size(); ++i) {
    auto &x = a.blocks[i];
    auto &y = b.blocks[i];
    if (x.id != y.id || x.stmts.size() != y.stmts.size() || !equalTerm(x.term, y.term))
      return false;
    for (size_t k = 0; k < x.stmts.size(); ++k)
      if (!equalStmt(x.stmts[k], y.stmts[k]))
        return false;
  }
  return true;
}

bool equal(const ImplicitProgram &a, const ImplicitProgram &b) {
  if (a.entry != b.entry || a.functions.size() != b.functions.size())
    return false;
  for (size_t i = 0; i < a.functions.size(); ++i)
    if (!equal(a.functions[i], b.functions[i]))
      return false;
  return true;
}

std::string dump(const ImplicitFunction &fn) {
  std::string out = fn.is_task ? "task " : "";
  out += fn.name + "(";
  for (size_t i = 0; i < fn.params.size(); ++i)
    out += (i ? ", " : "") + fn.params[i];
  out += fn.returns_value ? ") -> i64\n" : ") -> void\n";
  for (auto &b : fn.blocks) {
    out += "  b" + std::to_string(b.id) + ":\n";
    for (auto &s : b.stmts)
      out += "    " + stmtText(s) + "\n";
    out += "    T: " + termText(b.term) + "\n";
  }
  return out;
}

std::string dump(const ImplicitProgram &program) {
  std::string out;
  for (size_t i = 0; i < program.functions.size(); ++i) {
    if (i)
      out += '\n';
    out += dump(program.functions[i]);
  }
  return out;
}

} // namespace cocoon::ir
