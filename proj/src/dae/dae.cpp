#include "cocoon/dae/dae.hpp"
#include "cocoon/ir/analysis.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>

namespace cocoon::dae {

using namespace cocoon::ir;

namespace {

bool touchesMemory(const Stmt &s) {
  return std::visit(Overloaded{
                        [](const Let &x) { return ast::containsMemoryAccess(*x.value); },
                        [](const Assign &x) { return ast::containsMemoryAccess(*x.value); },
                        [](const MemStore &) { return true; },
                        [](const auto &) { return false; },
                    },
                    s.node);
}

ExprPtr valueOf(const Stmt &s) {
  if (auto *x = std::get_if<Let>(&s.node))
    return x->value;
  if (auto *x = std::get_if<Assign>(&s.node))
    return x->value;
  return nullptr;
}

ImplicitFunction accessTask(const ImplicitFunction &parent, const DaeSite &site, const Stmt &s,
                            size_t ordinal) {
  ImplicitFunction fn;
  fn.name = parent.name + "__access" + std::to_string(ordinal);
  fn.params = site.live_ins;
  fn.returns_value = site.defined.has_value();
  fn.is_task = true;
  fn.span = s.span;
  BasicBlock b{0, {}, {}};
  if (site.defined) {
    bool isParam = std::find(fn.params.begin(), fn.params.end(), *site.defined) != fn.params.end();
    if (isParam)
      b.stmts.push_back(Stmt{Assign{*site.defined, valueOf(s)}, s.span});
    else
      b.stmts.push_back(Stmt{Let{*site.defined, valueOf(s)}, s.span});
    b.term = Terminator{ReturnTerm{ast::makeVar(*site.defined, s.span)}, s.span};
  } else {
    Stmt copy = s;
    copy.dae = false;
    b.stmts.push_back(std::move(copy));
    b.term = Terminator{ReturnTerm{nullptr}, s.span};
  }
  fn.blocks.push_back(std::move(b));
  return fn;
}

std::vector<ExprPtr> argsFor(const std::vector<std::string> &names, Span span) {
  std::vector<ExprPtr> out;
  for (auto &n : names)
    out.push_back(ast::makeVar(n, span));
  return out;
}

BlockId remap(BlockId id, const std::vector<BlockId> &first) { return first.at(id); }

Terminator remapTerm(const Terminator &t, const std::vector<BlockId> &first) {
  Terminator out = t;
  std::visit(Overloaded{
                 [&](IfTerm &x) {
                   x.then_block = remap(x.then_block, first);
                   x.else_block = remap(x.else_block, first);
                 },
                 [&](GotoTerm &x) { x.target = remap(x.target, first); },
                 [&](WhileTerm &x) {
                   x.body = remap(x.body, first);
                   x.exit = remap(x.exit, first);
                 },
                 [](ReturnTerm &) {},
                 [&](SyncTerm &x) { x.next = remap(x.next, first); },
             },
             out.node);
  return out;
}

} // namespace

std::vector<DaeSite> findSites(const ImplicitProgram &program) {
  std::vector<DaeSite> out;
  for (auto &fn : program.functions)
    for (auto &b : fn.blocks)
      for (size_t i = 0; i < b.stmts.size(); ++i)
        if (b.stmts[i].dae)
          out.push_back(DaeSite{fn.name, b.id, i, uses(b.stmts[i]), definition(b.stmts[i]),
                                b.stmts[i].span});
  return out;
}

DaeResult apply(const ImplicitProgram &program) {
  DaeResult result;
  auto sites = findSites(program);

  for (auto &fn : program.functions) {
    auto loops = outermostLoop(fn);
    for (auto &site : sites) {
      if (site.function != fn.name)
        continue;
      auto &s = fn.block(site.block).stmts[site.index];
      if (loops[site.block])
        result.diagnostics.push_back(Diagnostic{
            site.span, "DAE site in `" + fn.name +
                           "` is inside a loop body; the sync it needs cannot be placed there"});
      if (!touchesMemory(s))
        result.diagnostics.push_back(
            Diagnostic{site.span, "DAE site in `" + fn.name + "` has no memory access"});
      if (std::holds_alternative<SpawnAssign>(s.node) || std::holds_alternative<SpawnVoid>(s.node))
        result.diagnostics.push_back(
            Diagnostic{site.span, "DAE site in `" + fn.name + "` is already a spawn"});
    }
  }
  if (!result.diagnostics.empty()) {
    result.program = program;
    return result;
  }

  result.program.entry = program.entry;
  for (auto &fn : program.functions) {
    // new id of the first piece of every old block
    std::vector<BlockId> first(fn.blocks.size());
    BlockId next = 0;
    for (auto &b : fn.blocks) {
      first[b.id] = next;
      next += 1 + BlockId(std::count_if(b.stmts.begin(), b.stmts.end(),
                                        [](const Stmt &s) { return s.dae; }));
    }

    ImplicitFunction out = fn;
    out.blocks.clear();
    out.entry = first[fn.entry];
    std::vector<ImplicitFunction> extracted;
    size_t ordinal = 0;
    for (auto &b : fn.blocks) {
      BasicBlock piece{first[b.id], {}, {}};
      for (size_t i = 0; i < b.stmts.size(); ++i) {
        auto &s = b.stmts[i];
        if (!s.dae) {
          piece.stmts.push_back(s);
          continue;
        }
        DaeSite site{fn.name, b.id, i, uses(s), definition(s), s.span};
        auto task = accessTask(fn, site, s, ordinal++);
        if (site.defined)
          piece.stmts.push_back(
              Stmt{SpawnAssign{*site.defined, task.name, argsFor(site.live_ins, s.span)}, s.span});
        else
          piece.stmts.push_back(Stmt{SpawnVoid{task.name, argsFor(site.live_ins, s.span)}, s.span});
        BlockId after = piece.id + 1;
        piece.term = Terminator{SyncTerm{after}, s.span};
        out.blocks.push_back(std::move(piece));
        piece = BasicBlock{after, {}, {}};
        extracted.push_back(std::move(task));
      }
      piece.term = remapTerm(b.term, first);
      out.blocks.push_back(std::move(piece));
    }
    result.program.functions.push_back(std::move(out));
    for (auto &t : extracted)
      result.program.functions.push_back(std::move(t));
  }
  return result;
}

ImplicitProgram strip(const ImplicitProgram &program) {
  ImplicitProgram out = program;
  for (auto &fn : out.functions)
    for (auto &b : fn.blocks)
      for (auto &s : b.stmts)
        s.dae = false;
  return out;
}

} // namespace cocoon::dae
