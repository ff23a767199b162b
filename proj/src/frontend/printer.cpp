#include "cocoon/frontend/printer.hpp"
#include "cocoon/overloaded.hpp"

namespace cocoon::frontend {

namespace {

using namespace cocoon::ast;

// Unary operators bind tighter than any binary operator.
constexpr int kUnaryPrec = 7;

int exprPrec(const Expr &e) {
  if (auto *b = std::get_if<Binary>(&e.node))
    return precedence(b->op);
  if (std::holds_alternative<Unary>(e.node))
    return kUnaryPrec;
  return 8;
}

void print(const Expr &e, std::string &out);

void printOperand(const Expr &e, int minPrec, std::string &out) {
  bool paren = exprPrec(e) < minPrec;
  if (paren)
    out += '(';
  print(e, out);
  if (paren)
    out += ')';
}

void print(const Expr &e, std::string &out) {
  std::visit(Overloaded{
                 [&](const IntLit &x) { out += std::to_string(x.value); },
                 [&](const Var &x) { out += x.name; },
                 [&](const Binary &x) {
                   int p = precedence(x.op);
                   // left associative: the right operand needs strictly higher precedence
                   printOperand(*x.lhs, p, out);
                   out += ' ';
                   out += spelling(x.op);
                   out += ' ';
                   printOperand(*x.rhs, p + 1, out);
                 },
                 [&](const Unary &x) {
                   out += spelling(x.op);
                   // keep `- -x` from lexing as a different token sequence
                   if (auto *inner = std::get_if<Unary>(&x.operand->node);
                       inner && inner->op == x.op)
                     out += ' ';
                   printOperand(*x.operand, kUnaryPrec, out);
                 },
                 [&](const MemLoad &x) {
                   out += "mem[";
                   print(*x.addr, out);
                   out += ']';
                 },
                 [&](const MemXchg &x) {
                   out += "mem_xchg(";
                   print(*x.addr, out);
                   out += ", ";
                   print(*x.value, out);
                   out += ')';
                 },
             },
             e.node);
}

std::string args(const std::vector<ExprPtr> &as) {
  std::string out;
  for (size_t i = 0; i < as.size(); ++i) {
    if (i)
      out += ", ";
    print(*as[i], out);
  }
  return out;
}

class ProgramPrinter {
public:
  std::string out;

  void block(const Block &b, int depth) {
    out += "{\n";
    for (auto &s : b)
      stmt(s, depth + 1);
    indent(depth);
    out += '}';
  }

  void stmt(const Stmt &s, int depth) {
    indent(depth);
    std::visit(Overloaded{
                   [&](const Let &x) { out += "let " + x.name + " = " + printExpr(*x.value) + ";\n"; },
                   [&](const Assign &x) { out += x.name + " = " + printExpr(*x.value) + ";\n"; },
                   [&](const SpawnAssign &x) {
                     out += (x.declares ? "let " : "") + x.dest + " = spawn " + x.callee + "(" +
                            args(x.args) + ");\n";
                   },
                   [&](const SpawnVoid &x) { out += "spawn " + x.callee + "(" + args(x.args) + ");\n"; },
                   [&](const Sync &) { out += "sync;\n"; },
                   [&](const If &x) {
                     out += "if (" + printExpr(*x.cond) + ") ";
                     block(x.then_block, depth);
                     if (!x.else_block.empty()) {
                       out += " else ";
                       block(x.else_block, depth);
                     }
                     out += '\n';
                   },
                   [&](const While &x) {
                     out += "while (" + printExpr(*x.cond) + ") ";
                     block(x.body, depth);
                     out += '\n';
                   },
                   [&](const Return &x) {
                     out += x.value ? "return " + printExpr(*x.value) + ";\n" : "return;\n";
                   },
                   [&](const MemStore &x) {
                     out += "mem[" + printExpr(*x.addr) + "] = " + printExpr(*x.value) + ";\n";
                   },
                   [&](const DaePragma &x) {
                     out += "#pragma bombyx dae\n";
                     stmt(*x.inner, depth);
                   },
               },
               s.node);
  }

  void indent(int depth) { out.append(size_t(depth) * 2, ' '); }
};

} // namespace

std::string printExpr(const Expr &e) {
  std::string out;
  print(e, out);
  return out;
}

std::string printProgram(const Program &p) {
  ProgramPrinter pp;
  for (size_t i = 0; i < p.functions.size(); ++i) {
    auto &f = p.functions[i];
    if (i)
      pp.out += '\n';
    if (f.is_task)
      pp.out += "task ";
    pp.out += f.returns_value ? "i64 " : "void ";
    pp.out += f.name + "(";
    for (size_t a = 0; a < f.params.size(); ++a)
      pp.out += (a ? ", i64 " : "i64 ") + f.params[a].name;
    pp.out += ") ";
    pp.block(f.body, 0);
    pp.out += '\n';
  }
  return pp.out;
}

} // namespace cocoon::frontend
