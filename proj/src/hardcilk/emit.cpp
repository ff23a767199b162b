#include "cocoon/frontend/printer.hpp"
#include "cocoon/hardcilk/backend.hpp"
#include "cocoon/ir/analysis.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>
#include <set>

namespace cocoon::hardcilk {

using namespace cocoon::cps;

namespace {

std::string fieldName(const std::string &var) {
  return var == "ret_dest" || var == "_pad" ? var + "_v" : var;
}

StructLayout layoutFields(std::string name, const std::vector<std::string> &vars) {
  StructLayout s;
  s.name = std::move(name);
  s.fields.push_back(StructField{"ret_dest", 0, 8});
  for (auto &v : vars)
    s.fields.push_back(StructField{fieldName(v), uint32_t(8 * s.fields.size()), 8});
  s.payload_bits = uint32_t(64 * s.fields.size());
  s.total_bits = paddedSize(s.payload_bits);
  if (s.total_bits > s.payload_bits)
    s.fields.push_back(
        StructField{"_pad", s.payload_bits / 8, (s.total_bits - s.payload_bits) / 8});
  return s;
}

const ClosureLayout *closureFor(const ExplicitProgram &program, const std::string &cont) {
  for (auto &t : program.tasks)
    for (auto &[_, c] : t.closures)
      if (c.continuation == cont)
        return &c;
  return nullptr;
}

ast::ExprPtr renamed(const ast::ExprPtr &e) {
  return std::visit(
      Overloaded{
          [&](const ast::IntLit &) { return e; },
          [&](const ast::Var &x) { return ast::makeVar("v_" + x.name, e->span); },
          [&](const ast::Binary &x) {
            return std::make_shared<const ast::Expr>(
                ast::Expr{ast::Binary{x.op, renamed(x.lhs), renamed(x.rhs)}, e->span});
          },
          [&](const ast::Unary &x) {
            return std::make_shared<const ast::Expr>(
                ast::Expr{ast::Unary{x.op, renamed(x.operand)}, e->span});
          },
          [&](const ast::MemLoad &x) {
            return std::make_shared<const ast::Expr>(ast::Expr{ast::MemLoad{renamed(x.addr)}, e->span});
          },
          [&](const ast::MemXchg &x) {
            return std::make_shared<const ast::Expr>(
                ast::Expr{ast::MemXchg{renamed(x.addr), renamed(x.value)}, e->span});
          },
      },
      e->node);
}

std::string cpp(const ast::ExprPtr &e) { return frontend::printExpr(*renamed(e)); }

bool usesXchg(const ast::Expr &e) {
  return std::visit(Overloaded{
                        [](const ast::MemXchg &) { return true; },
                        [](const ast::Binary &x) { return usesXchg(*x.lhs) || usesXchg(*x.rhs); },
                        [](const ast::Unary &x) { return usesXchg(*x.operand); },
                        [](const ast::MemLoad &x) { return usesXchg(*x.addr); },
                        [](const auto &) { return false; },
                    },
                    e.node);
}

// Shape of the task's CFG for the dominance analyses.
ir::ImplicitFunction skeleton(const ExplicitTask &task) {
  ir::ImplicitFunction fn;
  fn.name = task.name;
  for (auto &b : task.blocks) {
    ir::BasicBlock bb{b.id, {}, {}};
    bb.term.node = std::visit(
        Overloaded{
            [](const ir::IfTerm &x) -> decltype(bb.term.node) { return x; },
            [](const ir::GotoTerm &x) -> decltype(bb.term.node) { return x; },
            [](const ir::WhileTerm &x) -> decltype(bb.term.node) { return x; },
            [](const ir::ReturnTerm &x) -> decltype(bb.term.node) { return x; },
            [](const SpawnNextTerm &) -> decltype(bb.term.node) { return ir::ReturnTerm{}; },
        },
        b.term.node);
    fn.blocks.push_back(std::move(bb));
  }
  return fn;
}

void collectVars(const ast::ExprPtr &e, std::vector<std::string> &out) {
  if (!e)
    return;
  for (auto &v : ast::freeVars(*e))
    if (std::find(out.begin(), out.end(), v) == out.end())
      out.push_back(v);
}

class PeWriter {
public:
  PeWriter(const ExplicitProgram &program, const SystemRelations &relations,
           const ExplicitTask &task)
      : prog_(program), rel_(relations.at(task.name)), task_(task) {
    for (auto &name : reachableTasks(program))
      index_.emplace(name, uint16_t(index_.size()));
    ipdom_ = ir::immediatePostDominators(skeleton(task));
  }

  EmittedPe emit() {
    EmittedPe pe;
    pe.task = task_.name;
    pe.file_name = "pe_" + task_.name + ".cpp";
    pe.input = inputStruct(prog_, task_);
    header(pe.input);
    function(pe.input);
    pe.source = std::move(out_);
    return pe;
  }

private:
  const ExplicitProgram &prog_;
  const TaskRelations &rel_;
  const ExplicitTask &task_;
  std::map<std::string, uint16_t> index_;
  std::vector<std::optional<BlockId>> ipdom_;
  std::string out_;
  int depth_ = 0;

  void line(const std::string &s) {
    if (!s.empty())
      out_.append(size_t(depth_) * 2, ' ');
    out_ += s;
    out_ += '\n';
  }

  void structDef(const StructLayout &s) {
    line("struct " + s.name + " {");
    ++depth_;
    for (auto &f : s.fields) {
      if (f.name == "_pad")
        line("uint8_t _pad[" + std::to_string(f.size_bytes) + "];");
      else if (f.name == "ret_dest")
        line("uint64_t ret_dest;");
      else
        line("int64_t " + f.name + ";");
    }
    --depth_;
    line("};");
    line("static_assert(sizeof(" + s.name + ") * 8 == " + std::to_string(s.total_bits) +
         ", \"record must fill its padded size\");");
    line("");
  }

  void header(const StructLayout &input) {
    line("// Processing element for task `" + task_.name + "`.");
    line("// Generated by cocoon from MiniCilk source; do not edit.");
    line("//");
    line("// Stream contract assumed of the HardCilk runtime:");
    line("//   taskIn         one " + input.name + " record per task instance");
    line("//   spawn_<t>      argument records of task t, to be scheduled");
    line("//   spawnNext_<t>  write-buffer records publishing a closure of t");
    line("//   sendArg_<t>    write-buffer records delivering into a closure of t");
    line("//   closureIn      byte addresses of freshly allocated closures");
    line("//   hostOut        write-buffer records addressed to the host");
    line("//   mem            global memory, one 64-bit word per index");
    line("// A return destination keeps the destination task index in bits 63..56");
    line("// (0xFF: host) and a byte address in bits 55..0. The record's `data` is");
    line("// the value for a send, the number of awaited results for a spawn_next,");
    line("// and 1 for a join increment, which tells the destination to expect one");
    line("// more result because a child inherited this task's destination.");
    line("");
    line("#include <cstdint>");
    line("#include <hls_stream.h>");
    line("");
    line("namespace cocoon_pe_" + task_.name + " {");
    line("");
    for (auto &[name, idx] : index_)
      line("constexpr uint16_t TASK_" + name + " = " + std::to_string(idx) + ";");
    line("constexpr uint16_t TASK_HOST = 0xFF;");
    line("constexpr uint64_t ADDR_MASK = 0x00FFFFFFFFFFFFFFull;");
    line("");
    line("enum : uint8_t { WB_SPAWN_NEXT = 1, WB_SEND_ARGUMENT = 2, WB_JOIN_INCREMENT = 3 };");
    line("");
    line("struct write_buffer_record {");
    ++depth_;
    line("uint8_t kind;");
    line("uint16_t dest_task;");
    line("uint32_t payload_bytes;");
    line("uint64_t addr;");
    line("int64_t data;");
    --depth_;
    line("};");
    line("");
    line("inline uint64_t cocoon_dest(uint16_t task, uint64_t addr) {");
    line("  return (uint64_t(task) << 56) | (addr & ADDR_MASK);");
    line("}");
    line("");

    std::set<std::string> defined{input.name};
    structDef(input);
    for (auto &callee : rel_.spawns) {
      auto *t = prog_.find(callee);
      auto s = inputStruct(prog_, *t);
      if (defined.insert(s.name).second)
        structDef(s);
    }
    for (auto &[handle, c] : task_.closures) {
      auto s = computeClosureStruct(c, c.continuation + "_closure");
      if (defined.insert(s.name).second)
        structDef(s);
    }
  }

  void function(const StructLayout &input) {
    std::vector<std::string> ports{"hls::stream<" + input.name + "> &taskIn"};
    std::vector<std::string> pragmas{"#pragma HLS INTERFACE axis port=taskIn"};
    for (auto &callee : rel_.spawns) {
      ports.push_back("hls::stream<" + inputStruct(prog_, *prog_.find(callee)).name + "> &spawn_" +
                      callee);
      pragmas.push_back("#pragma HLS INTERFACE axis port=spawn_" + callee);
    }
    for (auto &cont : rel_.spawn_nexts) {
      ports.push_back("hls::stream<write_buffer_record> &spawnNext_" + cont);
      pragmas.push_back("#pragma HLS INTERFACE axis port=spawnNext_" + cont);
    }
    for (auto &cont : rel_.send_arguments_to) {
      ports.push_back("hls::stream<write_buffer_record> &sendArg_" + cont);
      pragmas.push_back("#pragma HLS INTERFACE axis port=sendArg_" + cont);
    }
    if (!task_.closures.empty()) {
      ports.push_back("hls::stream<uint64_t> &closureIn");
      pragmas.push_back("#pragma HLS INTERFACE axis port=closureIn");
    }
    if (rel_.returns_to_host) {
      ports.push_back("hls::stream<write_buffer_record> &hostOut");
      pragmas.push_back("#pragma HLS INTERFACE axis port=hostOut");
    }
    ports.push_back("int64_t *mem");
    pragmas.push_back("#pragma HLS INTERFACE m_axi port=mem");

    line("void pe_" + task_.name + "(");
    ++depth_;
    for (size_t i = 0; i < ports.size(); ++i)
      line(ports[i] + (i + 1 < ports.size() ? "," : ") {"));
    --depth_;
    for (auto &p : pragmas)
      line(p);
    ++depth_;
    line("const " + input.name + " in = taskIn.read();");
    line("const uint64_t ret_dest = in.ret_dest;");

    std::vector<std::string> vars = task_.params;
    std::vector<std::string> written;
    bool xchg = false;
    for (auto &b : task_.blocks) {
      for (auto &s : b.stmts)
        std::visit(Overloaded{
                       [&](const ir::Let &x) {
                         collectVars(x.value, vars);
                         written.push_back(x.name);
                         xchg |= usesXchg(*x.value);
                       },
                       [&](const ir::Assign &x) {
                         collectVars(x.value, vars);
                         written.push_back(x.name);
                         xchg |= usesXchg(*x.value);
                       },
                       [&](const ir::MemStore &x) {
                         collectVars(x.addr, vars);
                         collectVars(x.value, vars);
                         xchg |= usesXchg(*x.addr) || usesXchg(*x.value);
                       },
                       [&](const SpawnTask &x) {
                         for (auto &a : x.args) {
                           collectVars(a, vars);
                           xchg |= usesXchg(*a);
                         }
                       },
                       [](const DeclareClosure &) {},
                   },
                   s.node);
      std::visit(Overloaded{
                     [&](const ir::IfTerm &x) {
                       collectVars(x.cond, vars);
                       xchg |= usesXchg(*x.cond);
                     },
                     [&](const ir::WhileTerm &x) {
                       collectVars(x.cond, vars);
                       xchg |= usesXchg(*x.cond);
                     },
                     [&](const ir::ReturnTerm &x) {
                       collectVars(x.value, vars);
                       if (x.value)
                         xchg |= usesXchg(*x.value);
                     },
                     [](const auto &) {},
                 },
                 b.term.node);
    }
    for (auto &[_, c] : task_.closures)
      for (auto &r : c.ready_args)
        collectVars(ast::makeVar(r), vars);
    // variables assigned but never read still need a declaration
    std::vector<std::string> dead;
    for (auto &w : written)
      if (std::find(vars.begin(), vars.end(), w) == vars.end())
        dead.push_back(w);
    vars.insert(vars.end(), dead.begin(), dead.end());
    for (auto &v : vars) {
      bool param = std::find(task_.params.begin(), task_.params.end(), v) != task_.params.end();
      line("int64_t v_" + v + " = " + (param ? "in." + fieldName(v) : std::string("0")) + ";");
    }
    for (auto &[handle, _] : task_.closures) {
      line("uint64_t " + handle + " = 0;");
      line("int64_t " + handle + "_joins = 0;");
    }
    if (xchg)
      line("auto mem_xchg = [&](int64_t a, int64_t v) { int64_t old = mem[a]; mem[a] = v; return old; };");

    line("auto send_result = [&](uint8_t kind, uint32_t bytes, int64_t data) {");
    ++depth_;
    line("const uint16_t task = uint16_t(ret_dest >> 56);");
    line("const write_buffer_record r{kind, task, bytes, ret_dest & ADDR_MASK, data};");
    line("switch (task) {");
    for (auto &cont : rel_.send_arguments_to)
      line("case TASK_" + cont + ": sendArg_" + cont + ".write(r); break;");
    if (rel_.returns_to_host)
      line("case TASK_HOST: hostOut.write(r); break;");
    line("default: break;");
    line("}");
    --depth_;
    line("};");
    line("(void)send_result;");
    line("(void)mem;");
    for (auto &v : dead)
      line("(void)v_" + v + "; // assigned but never read");
    seq(0, std::nullopt, std::nullopt);
    --depth_;
    line("}");
    line("");
    line("} // namespace cocoon_pe_" + task_.name);
  }

  void stmt(const Stmt &s) {
    std::visit(Overloaded{
                   [&](const ir::Let &x) { line("v_" + x.name + " = " + cpp(x.value) + ";"); },
                   [&](const ir::Assign &x) { line("v_" + x.name + " = " + cpp(x.value) + ";"); },
                   [&](const ir::MemStore &x) {
                     line("mem[" + cpp(x.addr) + "] = " + cpp(x.value) + ";");
                   },
                   [&](const DeclareClosure &x) {
                     auto &c = task_.closure(x.handle);
                     line(x.handle + " = closureIn.read();");
                     line(x.handle + "_joins = " +
                          std::to_string(c.join.kind == JoinPolicy::Static ? c.join.count : 0) +
                          ";");
                   },
                   [&](const SpawnTask &x) { spawn(x); },
               },
               s.node);
  }

  void spawn(const SpawnTask &x) {
    auto *callee = prog_.find(x.callee);
    auto in = inputStruct(prog_, *callee);
    line("{");
    ++depth_;
    line(in.name + " msg{};");
    std::visit(Overloaded{
                   [&](const ClosureField &d) {
                     auto &c = task_.closure(d.handle);
                     auto slot = *c.slotOf(d.field);
                     line("msg.ret_dest = cocoon_dest(TASK_" + c.continuation + ", " + d.handle +
                          " + " + std::to_string(8 * slot) + ");");
                     if (c.join.kind == JoinPolicy::Dynamic)
                       line("++" + d.handle + "_joins;");
                   },
                   [&](const CounterOnly &d) {
                     auto &c = task_.closure(d.handle);
                     line("msg.ret_dest = cocoon_dest(TASK_" + c.continuation + ", " + d.handle +
                          ");");
                     if (c.join.kind == JoinPolicy::Dynamic)
                       line("++" + d.handle + "_joins;");
                   },
                   [&](const ParentDest &) {
                     line("send_result(WB_JOIN_INCREMENT, 0, 1);");
                     line("msg.ret_dest = ret_dest;");
                   },
               },
               x.dest);
    for (size_t i = 0; i < x.args.size(); ++i)
      line("msg." + fieldName(callee->params[i]) + " = " + cpp(x.args[i]) + ";");
    line("spawn_" + x.callee + ".write(msg);");
    --depth_;
    line("}");
  }

  void spawnNext(const SpawnNextTerm &x) {
    auto &c = task_.closure(x.handle);
    auto s = computeClosureStruct(c, c.continuation + "_closure");
    line("mem[" + x.handle + " / 8] = int64_t(ret_dest);");
    for (size_t i = 0; i < c.ready_args.size(); ++i)
      line("mem[" + x.handle + " / 8 + " + std::to_string(i + 1) + "] = v_" + c.ready_args[i] +
           ";");
    line("spawnNext_" + c.continuation + ".write(write_buffer_record{WB_SPAWN_NEXT, TASK_" +
         c.continuation + ", " + std::to_string(s.total_bits / 8) + ", " + x.handle + ", " +
         x.handle + "_joins});");
    line("return;");
  }

  void ret(const ir::ReturnTerm &x) {
    if (x.value)
      line("send_result(WB_SEND_ARGUMENT, 8, " + cpp(x.value) + ");");
    else
      line("send_result(WB_SEND_ARGUMENT, 0, 0);");
    line("return;");
  }

  void seq(BlockId b, std::optional<BlockId> stop, std::optional<BlockId> loop) {
    for (;;) {
      if (stop && b == *stop)
        return;
      auto &blk = task_.blocks.at(b);
      for (auto &s : blk.stmts)
        stmt(s);
      bool done = std::visit(
          Overloaded{
              [&](const ir::ReturnTerm &x) {
                ret(x);
                return true;
              },
              [&](const SpawnNextTerm &x) {
                spawnNext(x);
                return true;
              },
              [&](const ir::GotoTerm &x) {
                if (loop && x.target == *loop) {
                  if (stop != loop)
                    line("continue;");
                  return true;
                }
                b = x.target;
                return false;
              },
              [&](const ir::IfTerm &x) {
                auto join = ipdom_[b];
                line("if (" + cpp(x.cond) + ") {");
                ++depth_;
                seq(x.then_block, join, loop);
                --depth_;
                if (!join || x.else_block != *join) {
                  line("} else {");
                  ++depth_;
                  seq(x.else_block, join, loop);
                  --depth_;
                }
                line("}");
                if (!join)
                  return true;
                b = *join;
                return false;
              },
              [&](const ir::WhileTerm &x) {
                line("while (" + cpp(x.cond) + ") {");
                ++depth_;
                seq(x.body, b, b);
                --depth_;
                line("}");
                b = x.exit;
                return false;
              },
          },
          blk.term.node);
      if (done)
        return;
    }
  }
};

} // namespace

StructLayout computeClosureStruct(const ClosureLayout &layout, std::string name) {
  std::vector<std::string> vars = layout.ready_args;
  vars.insert(vars.end(), layout.placeholders.begin(), layout.placeholders.end());
  auto s = layoutFields(std::move(name), vars);
  if (s.total_bits != layout.padded_bits)
    throw InternalError("closure struct " + s.name + " disagrees with its layout size");
  return s;
}

StructLayout inputStruct(const ExplicitProgram &program, const ExplicitTask &task) {
  if (task.is_continuation) {
    auto *c = closureFor(program, task.name);
    if (!c)
      throw InternalError("continuation `" + task.name + "` has no closure");
    return computeClosureStruct(*c, task.name + "_closure");
  }
  return layoutFields(task.name + "_args", task.params);
}

EmittedPe emitPe(const ExplicitProgram &program, const SystemRelations &relations,
                 const std::string &task) {
  auto *t = program.find(task);
  if (!t)
    throw InternalError("no task `" + task + "` to emit");
  return PeWriter(program, relations, *t).emit();
}

} // namespace cocoon::hardcilk
