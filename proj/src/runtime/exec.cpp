#include "cocoon/runtime/exec.hpp"
#include "cocoon/overloaded.hpp"

#include <map>

namespace cocoon::runtime {

std::optional<uint32_t> XProgram::index(std::string_view name) const {
  for (size_t i = 0; i < funcs.size(); ++i)
    if (funcs[i].name == name)
      return uint32_t(i);
  return std::nullopt;
}

namespace {

class SlotMap {
public:
  explicit SlotMap(XFunc &fn) : fn_(fn) {}

  uint32_t operator()(const std::string &name) {
    auto it = slots_.find(name);
    if (it != slots_.end())
      return it->second;
    uint32_t s = uint32_t(fn_.slot_names.size());
    fn_.slot_names.push_back(name);
    slots_.emplace(name, s);
    fn_.nslots = s + 1;
    return s;
  }

private:
  XFunc &fn_;
  std::map<std::string, uint32_t> slots_;
};

class CodeGen {
public:
  CodeGen(Code &code, SlotMap &slots) : code_(code), slots_(slots) {}

  void expr(const ast::Expr &e) {
    std::visit(Overloaded{
                   [&](const ast::IntLit &x) { push(Instr{Op::Const, 0, x.value}); },
                   [&](const ast::Var &x) { push(Instr{Op::Slot, slots_(x.name), 0}); },
                   [&](const ast::Binary &x) { binary(x); },
                   [&](const ast::Unary &x) {
                     expr(*x.operand);
                     emit(Instr{x.op == ast::UnOp::Neg ? Op::Neg : Op::Not});
                   },
                   [&](const ast::MemLoad &x) {
                     expr(*x.addr);
                     emit(Instr{Op::Load});
                   },
                   [&](const ast::MemXchg &x) {
                     expr(*x.addr);
                     expr(*x.value);
                     pop(Instr{Op::Xchg});
                   },
               },
               e.node);
  }

private:
  Code &code_;
  SlotMap &slots_;
  uint32_t depth_ = 0;

  void emit(Instr in) { code_.ops.push_back(in); }
  void push(Instr in) {
    emit(in);
    code_.depth = std::max(code_.depth, ++depth_);
  }
  void pop(Instr in) {
    emit(in);
    --depth_;
  }

  void binary(const ast::Binary &x) {
    using ast::BinOp;
    if (x.op == BinOp::And || x.op == BinOp::Or) {
      expr(*x.lhs);
      size_t jump = code_.ops.size();
      emit(Instr{x.op == BinOp::And ? Op::AndJump : Op::OrJump});
      --depth_; // the fall-through path pops the left operand
      expr(*x.rhs);
      emit(Instr{Op::Bool});
      code_.ops[jump].arg = uint32_t(code_.ops.size());
      return;
    }
    expr(*x.lhs);
    expr(*x.rhs);
    static const std::map<BinOp, Op> ops = {
        {BinOp::Add, Op::Add}, {BinOp::Sub, Op::Sub}, {BinOp::Mul, Op::Mul},
        {BinOp::Div, Op::Div}, {BinOp::Mod, Op::Mod}, {BinOp::Eq, Op::Eq},
        {BinOp::Ne, Op::Ne},   {BinOp::Lt, Op::Lt},   {BinOp::Le, Op::Le},
        {BinOp::Gt, Op::Gt},   {BinOp::Ge, Op::Ge},
    };
    pop(Instr{ops.at(x.op)});
  }
};

Code compile(const ast::ExprPtr &e, SlotMap &slots) {
  Code c;
  if (e)
    CodeGen(c, slots).expr(*e);
  return c;
}

std::vector<Code> compileArgs(const std::vector<ast::ExprPtr> &args, SlotMap &slots) {
  std::vector<Code> out;
  for (auto &a : args)
    out.push_back(compile(a, slots));
  return out;
}

uint32_t calleeIndex(const std::map<std::string, uint32_t> &index, const std::string &name) {
  auto it = index.find(name);
  if (it == index.end())
    throw InternalError("unknown task `" + name + "`");
  return it->second;
}

XTerm structuredTerm(const ir::IfTerm &x, SlotMap &slots) {
  XTerm t;
  t.kind = XTerm::Branch;
  t.value = compile(x.cond, slots);
  t.t = x.then_block;
  t.e = x.else_block;
  return t;
}

XTerm structuredTerm(const ir::WhileTerm &x, SlotMap &slots) {
  XTerm t;
  t.kind = XTerm::Branch;
  t.value = compile(x.cond, slots);
  t.t = x.body;
  t.e = x.exit;
  return t;
}

XTerm returnTerm(const ir::ReturnTerm &x, SlotMap &slots) {
  XTerm t;
  t.kind = XTerm::Return;
  t.has_value = x.value != nullptr;
  t.value = compile(x.value, slots);
  return t;
}

XTerm jump(uint32_t target, bool counted) {
  XTerm t;
  t.kind = XTerm::Jump;
  t.t = target;
  t.counted = counted;
  return t;
}

} // namespace

XProgram compileImplicit(const ir::ImplicitProgram &program) {
  XProgram out;
  std::map<std::string, uint32_t> index;
  for (auto &f : program.functions)
    index.emplace(f.name, uint32_t(index.size()));
  for (auto &f : program.functions) {
    XFunc fn;
    fn.name = f.name;
    fn.nparams = uint32_t(f.params.size());
    fn.returns_value = f.returns_value;
    fn.is_access = f.name.find("__access") != std::string::npos;
    SlotMap slots(fn);
    for (auto &p : f.params)
      slots(p);
    for (auto &b : f.blocks) {
      XBlock xb;
      for (auto &s : b.stmts) {
        XStmt x;
        std::visit(Overloaded{
                       [&](const ir::Let &v) {
                         x.kind = XStmt::Set;
                         x.a = compile(v.value, slots);
                         x.target = slots(v.name);
                       },
                       [&](const ir::Assign &v) {
                         x.kind = XStmt::Set;
                         x.a = compile(v.value, slots);
                         x.target = slots(v.name);
                       },
                       [&](const ir::MemStore &v) {
                         x.kind = XStmt::Store;
                         x.a = compile(v.addr, slots);
                         x.b = compile(v.value, slots);
                       },
                       [&](const ir::SpawnAssign &v) {
                         x.kind = XStmt::Spawn;
                         x.callee = calleeIndex(index, v.callee);
                         x.args = compileArgs(v.args, slots);
                         x.target = slots(v.dest);
                       },
                       [&](const ir::SpawnVoid &v) {
                         x.kind = XStmt::Spawn;
                         x.callee = calleeIndex(index, v.callee);
                         x.args = compileArgs(v.args, slots);
                       },
                   },
                   s.node);
        xb.stmts.push_back(std::move(x));
      }
      xb.term = std::visit(Overloaded{
                               [&](const ir::IfTerm &x) { return structuredTerm(x, slots); },
                               [&](const ir::WhileTerm &x) { return structuredTerm(x, slots); },
                               [&](const ir::GotoTerm &x) { return jump(x.target, false); },
                               [&](const ir::SyncTerm &x) { return jump(x.next, true); },
                               [&](const ir::ReturnTerm &x) { return returnTerm(x, slots); },
                           },
                           b.term.node);
      fn.blocks.push_back(std::move(xb));
    }
    out.funcs.push_back(std::move(fn));
  }
  out.entry = calleeIndex(index, program.entry);
  return out;
}

XProgram compileExplicit(const cps::ExplicitProgram &program) {
  XProgram out;
  std::map<std::string, uint32_t> index;
  for (auto &t : program.tasks)
    index.emplace(t.name, uint32_t(index.size()));
  for (auto &task : program.tasks) {
    XFunc fn;
    fn.name = task.name;
    fn.nparams = uint32_t(task.params.size());
    fn.returns_value = task.returns_value;
    fn.is_access = task.origin.find("__access") != std::string::npos;
    SlotMap slots(fn);
    for (auto &p : task.params)
      slots(p);

    std::map<std::string, uint32_t> closureIndex;
    for (auto &[handle, layout] : task.closures) {
      closureIndex.emplace(handle, uint32_t(fn.closures.size()));
      XClosure c;
      c.handle = handle;
      c.cont = calleeIndex(index, layout.continuation);
      c.nvalues = uint32_t(layout.ready_args.size() + layout.placeholders.size());
      for (auto &r : layout.ready_args)
        c.ready_src.push_back(slots(r));
      c.nplaceholders = uint32_t(layout.placeholders.size());
      c.dynamic = layout.join.kind == cps::JoinPolicy::Dynamic;
      c.static_count = layout.join.count;
      fn.closures.push_back(std::move(c));
    }
    auto closureOf = [&](const std::string &handle) { return closureIndex.at(handle); };

    for (auto &b : task.blocks) {
      XBlock xb;
      for (auto &s : b.stmts) {
        XStmt x;
        std::visit(Overloaded{
                       [&](const ir::Let &v) {
                         x.kind = XStmt::Set;
                         x.a = compile(v.value, slots);
                         x.target = slots(v.name);
                       },
                       [&](const ir::Assign &v) {
                         x.kind = XStmt::Set;
                         x.a = compile(v.value, slots);
                         x.target = slots(v.name);
                       },
                       [&](const ir::MemStore &v) {
                         x.kind = XStmt::Store;
                         x.a = compile(v.addr, slots);
                         x.b = compile(v.value, slots);
                       },
                       [&](const cps::DeclareClosure &v) {
                         x.kind = XStmt::Declare;
                         x.target = closureOf(v.handle);
                       },
                       [&](const cps::SpawnTask &v) {
                         x.kind = XStmt::Spawn;
                         x.callee = calleeIndex(index, v.callee);
                         x.args = compileArgs(v.args, slots);
                         std::visit(Overloaded{
                                        [&](const cps::ClosureField &d) {
                                          auto &layout = task.closure(d.handle);
                                          auto slot = layout.slotOf(d.field);
                                          if (!slot || *slot == 0)
                                            throw InternalError("bad closure field " + d.field);
                                          x.dest = XDest{XDest::Field, closureOf(d.handle),
                                                         uint32_t(*slot - 1)};
                                        },
                                        [&](const cps::CounterOnly &d) {
                                          x.dest = XDest{XDest::Counter, closureOf(d.handle), 0};
                                        },
                                        [&](const cps::ParentDest &) {
                                          x.dest = XDest{XDest::Parent, kNone, 0};
                                        },
                                    },
                                    v.dest);
                       },
                   },
                   s.node);
        xb.stmts.push_back(std::move(x));
      }
      xb.term = std::visit(Overloaded{
                               [&](const ir::IfTerm &x) { return structuredTerm(x, slots); },
                               [&](const ir::WhileTerm &x) { return structuredTerm(x, slots); },
                               [&](const ir::GotoTerm &x) { return jump(x.target, false); },
                               [&](const ir::ReturnTerm &x) { return returnTerm(x, slots); },
                               [&](const cps::SpawnNextTerm &x) {
                                 XTerm t;
                                 t.kind = XTerm::Next;
                                 t.closure = closureOf(x.handle);
                                 return t;
                               },
                           },
                           b.term.node);
      fn.blocks.push_back(std::move(xb));
    }
    out.funcs.push_back(std::move(fn));
  }
  out.entry = calleeIndex(index, program.entry);
  return out;
}

} // namespace cocoon::runtime
