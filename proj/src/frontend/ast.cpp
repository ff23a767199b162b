#include "cocoon/frontend/ast.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>

namespace cocoon::ast {

std::string_view spelling(BinOp op) {
  switch (op) {
  case BinOp::Add: return "+";
  case BinOp::Sub: return "-";
  case BinOp::Mul: return "*";
  case BinOp::Div: return "/";
  case BinOp::Mod: return "%";
  case BinOp::Eq: return "==";
  case BinOp::Ne: return "!=";
  case BinOp::Lt: return "<";
  case BinOp::Le: return "<=";
  case BinOp::Gt: return ">";
  case BinOp::Ge: return ">=";
  case BinOp::And: return "&&";
  case BinOp::Or: return "||";
  }
  return "?";
}

std::string_view spelling(UnOp op) { return op == UnOp::Neg ? "-" : "!"; }

int precedence(BinOp op) {
  switch (op) {
  case BinOp::Or: return 1;
  case BinOp::And: return 2;
  case BinOp::Eq:
  case BinOp::Ne: return 3;
  case BinOp::Lt:
  case BinOp::Le:
  case BinOp::Gt:
  case BinOp::Ge: return 4;
  case BinOp::Add:
  case BinOp::Sub: return 5;
  case BinOp::Mul:
  case BinOp::Div:
  case BinOp::Mod: return 6;
  }
  return 0;
}

ExprPtr makeInt(int64_t v, Span span) {
  return std::make_shared<const Expr>(Expr{IntLit{v}, span});
}
ExprPtr makeVar(std::string name, Span span) {
  return std::make_shared<const Expr>(Expr{Var{std::move(name)}, span});
}
ExprPtr makeBinary(BinOp op, ExprPtr lhs, ExprPtr rhs, Span span) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}, span});
}

const FunctionDecl *Program::find(std::string_view name) const {
  for (auto &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

namespace {

bool equalPtr(const ExprPtr &a, const ExprPtr &b) {
  if (!a || !b)
    return !a && !b;
  return equal(*a, *b);
}

bool equalArgs(const std::vector<ExprPtr> &a, const std::vector<ExprPtr> &b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), equalPtr);
}

} // namespace

bool equal(const Expr &a, const Expr &b) {
  if (a.node.index() != b.node.index())
    return false;
  return std::visit(
      Overloaded{
          [&](const IntLit &x) { return x.value == std::get<IntLit>(b.node).value; },
          [&](const Var &x) { return x.name == std::get<Var>(b.node).name; },
          [&](const Binary &x) {
            auto &y = std::get<Binary>(b.node);
            return x.op == y.op && equalPtr(x.lhs, y.lhs) && equalPtr(x.rhs, y.rhs);
          },
          [&](const Unary &x) {
            auto &y = std::get<Unary>(b.node);
            return x.op == y.op && equalPtr(x.operand, y.operand);
          },
          [&](const MemLoad &x) { return equalPtr(x.addr, std::get<MemLoad>(b.node).addr); },
          [&](const MemXchg &x) {
            auto &y = std::get<MemXchg>(b.node);
            return equalPtr(x.addr, y.addr) && equalPtr(x.value, y.value);
          },
      },
      a.node);
}

bool equal(const Stmt &a, const Stmt &b) {
  if (a.node.index() != b.node.index())
    return false;
  return std::visit(
      Overloaded{
          [&](const Let &x) {
            auto &y = std::get<Let>(b.node);
            return x.name == y.name && equalPtr(x.value, y.value);
          },
          [&](const Assign &x) {
            auto &y = std::get<Assign>(b.node);
            return x.name == y.name && equalPtr(x.value, y.value);
          },
          [&](const SpawnAssign &x) {
            auto &y = std::get<SpawnAssign>(b.node);
            return x.dest == y.dest && x.declares == y.declares && x.callee == y.callee &&
                   equalArgs(x.args, y.args);
          },
          [&](const SpawnVoid &x) {
            auto &y = std::get<SpawnVoid>(b.node);
            return x.callee == y.callee && equalArgs(x.args, y.args);
          },
          [&](const Sync &) { return true; },
          [&](const If &x) {
            auto &y = std::get<If>(b.node);
            return equalPtr(x.cond, y.cond) && equal(x.then_block, y.then_block) &&
                   equal(x.else_block, y.else_block);
          },
          [&](const While &x) {
            auto &y = std::get<While>(b.node);
            return equalPtr(x.cond, y.cond) && equal(x.body, y.body);
          },
          [&](const Return &x) { return equalPtr(x.value, std::get<Return>(b.node).value); },
          [&](const MemStore &x) {
            auto &y = std::get<MemStore>(b.node);
            return equalPtr(x.addr, y.addr) && equalPtr(x.value, y.value);
          },
          [&](const DaePragma &x) {
            return equal(*x.inner, *std::get<DaePragma>(b.node).inner);
          },
      },
      a.node);
}

bool equal(const Block &a, const Block &b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const Stmt &x, const Stmt &y) { return equal(x, y); });
}

bool equal(const Program &a, const Program &b) {
  if (a.entry != b.entry || a.functions.size() != b.functions.size())
    return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    auto &f = a.functions[i];
    auto &g = b.functions[i];
    if (f.name != g.name || f.returns_value != g.returns_value || f.is_task != g.is_task ||
        f.params.size() != g.params.size() || !equal(f.body, g.body))
      return false;
    for (size_t p = 0; p < f.params.size(); ++p)
      if (f.params[p].name != g.params[p].name)
        return false;
  }
  return true;
}

void collectVars(const Expr &e, std::vector<std::string> &out) {
  std::visit(Overloaded{
                 [](const IntLit &) {},
                 [&](const Var &v) {
                   if (std::find(out.begin(), out.end(), v.name) == out.end())
                     out.push_back(v.name);
                 },
                 [&](const Binary &b) {
                   collectVars(*b.lhs, out);
                   collectVars(*b.rhs, out);
                 },
                 [&](const Unary &u) { collectVars(*u.operand, out); },
                 [&](const MemLoad &m) { collectVars(*m.addr, out); },
                 [&](const MemXchg &m) {
                   collectVars(*m.addr, out);
                   collectVars(*m.value, out);
                 },
             },
             e.node);
}

std::vector<std::string> freeVars(const Expr &e) {
  std::vector<std::string> out;
  collectVars(e, out);
  return out;
}

bool containsMemoryAccess(const Expr &e) {
  return std::visit(Overloaded{
                        [](const IntLit &) { return false; },
                        [](const Var &) { return false; },
                        [](const Binary &b) {
                          return containsMemoryAccess(*b.lhs) || containsMemoryAccess(*b.rhs);
                        },
                        [](const Unary &u) { return containsMemoryAccess(*u.operand); },
                        [](const MemLoad &) { return true; },
                        [](const MemXchg &) { return true; },
                    },
                    e.node);
}

} // namespace cocoon::ast
