#include "cocoon/cps/explicit.hpp"
#include "cocoon/frontend/printer.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>
#include <deque>

namespace cocoon::cps {

using namespace cocoon::ir;

uint32_t paddedSize(uint32_t payloadBits) {
  uint32_t p = 128;
  while (p < payloadBits)
    p <<= 1;
  return p;
}

size_t ClosureLayout::slotCount() const {
  return (has_return_dest ? 1 : 0) + ready_args.size() + placeholders.size();
}

std::optional<size_t> ClosureLayout::slotOf(const std::string &name) const {
  size_t base = has_return_dest ? 1 : 0;
  for (size_t i = 0; i < ready_args.size(); ++i)
    if (ready_args[i] == name)
      return base + i;
  base += ready_args.size();
  for (size_t i = 0; i < placeholders.size(); ++i)
    if (placeholders[i] == name)
      return base + i;
  return std::nullopt;
}

const ClosureLayout &ExplicitTask::closure(const std::string &handle) const {
  auto it = closures.find(handle);
  if (it == closures.end())
    throw InternalError("task `" + name + "` has no closure `" + handle + "`");
  return it->second;
}

const ExplicitTask *ExplicitProgram::find(std::string_view name) const {
  for (auto &t : tasks)
    if (t.name == name)
      return &t;
  return nullptr;
}

std::vector<Path> partitionPaths(const ImplicitFunction &fn) {
  auto loops = outermostLoop(fn);
  std::vector<Path> paths{Path{fn.entry, {}, std::nullopt}};
  for (auto &b : fn.blocks)
    if (auto *s = std::get_if<SyncTerm>(&b.term.node)) {
      if (loops[b.id])
        throw InternalError("sync inside a loop reached the path partition of `" + fn.name + "`");
      paths.push_back(Path{s->next, {}, b.id});
    }
  std::vector<bool> owned(fn.blocks.size(), false);
  for (auto &p : paths) {
    for (auto b : reachableWithinRegion(fn, p.start)) {
      if (owned[b])
        throw InternalError("overlapping sync regions in `" + fn.name + "`");
      owned[b] = true;
      p.blocks.push_back(b);
    }
  }
  return paths;
}

bool forwardsToParent(const ImplicitFunction &fn, const SyncFacts &sync) {
  if (fn.returns_value)
    return false;
  auto &next = fn.block(sync.next);
  auto *ret = std::get_if<ReturnTerm>(&next.term.node);
  return next.stmts.empty() && ret && !ret->value;
}

ClosureLayout synthesizeClosure(const ImplicitFunction &fn, const SyncFacts &sync,
                                const std::vector<SpawnSite> &sites,
                                const std::vector<std::string> &firstUse,
                                std::string continuation) {
  ClosureLayout c;
  c.continuation = std::move(continuation);
  for (auto &v : firstUse)
    if (std::find(sync.carried.begin(), sync.carried.end(), v) != sync.carried.end())
      c.ready_args.push_back(v);
  for (auto &v : sync.carried)
    if (std::find(c.ready_args.begin(), c.ready_args.end(), v) == c.ready_args.end())
      c.ready_args.push_back(v);
  c.placeholders = sync.pending_results;

  auto idom = immediateDominators(fn);
  auto loops = outermostLoop(fn);
  bool fixed = std::all_of(sync.sites.begin(), sync.sites.end(), [&](size_t i) {
    return !loops[sites[i].block] && dominates(idom, sites[i].block, sync.block);
  });
  c.join = fixed ? JoinPolicy{JoinPolicy::Static, uint32_t(sync.sites.size())}
                 : JoinPolicy{JoinPolicy::Dynamic, 0};
  c.payload_bits = uint32_t(64 * c.slotCount());
  c.padded_bits = paddedSize(c.payload_bits);
  return c;
}

namespace {

struct SyncPlan {
  const SyncFacts *facts = nullptr;
  bool forwarded = false;
  std::string handle;
  BlockId placement = 0;
  ClosureLayout layout;
};

void addUnique(std::vector<std::string> &out, const std::vector<std::string> &vars) {
  for (auto &v : vars)
    if (std::find(out.begin(), out.end(), v) == out.end())
      out.push_back(v);
}

// Variables in the order a depth-first walk of the region first reads them.
// A sync reads what its own closure carries on.
std::vector<std::string> firstUseOrder(const ImplicitFunction &fn, BlockId start,
                                       const std::map<BlockId, SyncPlan> &plans) {
  std::vector<std::string> out;
  std::set<BlockId> seen;
  std::vector<BlockId> stack{start};
  while (!stack.empty()) {
    BlockId b = stack.back();
    stack.pop_back();
    if (!seen.insert(b).second)
      continue;
    auto &block = fn.block(b);
    for (auto &s : block.stmts)
      addUnique(out, uses(s));
    if (std::holds_alternative<SyncTerm>(block.term.node)) {
      auto &plan = plans.at(b);
      if (!plan.forwarded)
        addUnique(out, plan.layout.ready_args);
      continue;
    }
    addUnique(out, uses(block.term));
    auto succ = successors(block.term);
    for (auto it = succ.rbegin(); it != succ.rend(); ++it)
      stack.push_back(*it);
  }
  return out;
}

} // namespace

std::vector<ExplicitTask> lowerFunction(const ImplicitFunction &fn) {
  auto facts = computeLiveness(fn);
  auto sites = collectSpawnSites(fn);
  auto paths = partitionPaths(fn);

  std::map<BlockId, SyncPlan> plans;
  size_t k = 0;
  for (auto &sf : facts.syncs) {
    SyncPlan plan;
    plan.facts = &sf;
    plan.forwarded = forwardsToParent(fn, sf);
    if (!plan.forwarded) {
      plan.handle = "c" + std::to_string(k);
      plan.layout.continuation = fn.name + "__cont" + std::to_string(k);
      plan.placement = closurePlacement(fn, sf, sites);
      ++k;
    }
    plans.emplace(sf.block, std::move(plan));
  }
  // later syncs first, so a continuation knows what its own sync carries on
  for (auto it = plans.rbegin(); it != plans.rend(); ++it) {
    auto &plan = it->second;
    if (plan.forwarded)
      continue;
    auto order = firstUseOrder(fn, plan.facts->next, plans);
    plan.layout = synthesizeClosure(fn, *plan.facts, sites, order, plan.layout.continuation);
  }

  // which sync joins each spawn site
  std::map<std::pair<BlockId, size_t>, const SyncPlan *> siteSync;
  std::map<std::pair<BlockId, size_t>, size_t> siteIndex;
  for (auto &[_, plan] : plans)
    for (auto i : plan.facts->sites) {
      siteSync[{sites[i].block, sites[i].index}] = &plan;
      siteIndex[{sites[i].block, sites[i].index}] = i;
    }

  std::vector<ExplicitTask> out;
  for (auto &path : paths) {
    const SyncPlan *from = path.after_sync ? &plans.at(*path.after_sync) : nullptr;
    if (from && from->forwarded)
      continue;
    ExplicitTask task;
    task.origin = fn.name;
    task.returns_value = fn.returns_value;
    if (from) {
      task.name = from->layout.continuation;
      task.is_continuation = true;
      task.params = from->layout.ready_args;
      task.params.insert(task.params.end(), from->layout.placeholders.begin(),
                         from->layout.placeholders.end());
    } else {
      task.name = fn.name;
      task.params = fn.params;
    }

    std::vector<BlockId> order{path.start};
    for (auto b : path.blocks)
      if (b != path.start)
        order.push_back(b);
    std::map<BlockId, BlockId> renumber;
    for (size_t i = 0; i < order.size(); ++i)
      renumber[order[i]] = BlockId(i);
    auto target = [&](BlockId old) {
      auto it = renumber.find(old);
      if (it == renumber.end())
        throw InternalError("edge leaves its path in `" + fn.name + "`");
      return it->second;
    };

    std::vector<const SyncPlan *> declared;
    for (auto &[_, plan] : plans)
      if (!plan.forwarded && renumber.count(plan.placement)) {
        declared.push_back(&plan);
        task.closures.emplace(plan.handle, plan.layout);
      }
    auto layoutIndex = [&](const SyncPlan *p) {
      return size_t(std::find(declared.begin(), declared.end(), p) - declared.begin());
    };

    for (auto old : order) {
      auto &src = fn.block(old);
      Block blk;
      blk.id = renumber[old];
      std::set<const SyncPlan *> emitted;
      auto declare = [&](const SyncPlan *p, Span span) {
        if (emitted.insert(p).second)
          blk.stmts.push_back(Stmt{DeclareClosure{p->handle, layoutIndex(p)}, span});
      };
      for (size_t i = 0; i < src.stmts.size(); ++i) {
        auto &s = src.stmts[i];
        std::visit(
            Overloaded{
                [&](const Let &x) { blk.stmts.push_back(Stmt{x, s.span}); },
                [&](const Assign &x) { blk.stmts.push_back(Stmt{x, s.span}); },
                [&](const MemStore &x) { blk.stmts.push_back(Stmt{x, s.span}); },
                [&](const auto &) {
                  auto it = siteSync.find({old, i});
                  if (it == siteSync.end())
                    throw InternalError("spawn without a joining sync in `" + fn.name + "`");
                  const SyncPlan *plan = it->second;
                  auto &site = sites[siteIndex.at({old, i})];
                  std::vector<ExprPtr> args;
                  if (auto *sa = std::get_if<SpawnAssign>(&s.node))
                    args = sa->args;
                  else
                    args = std::get<SpawnVoid>(s.node).args;
                  SpawnDest dest = ParentDest{};
                  if (!plan->forwarded) {
                    if (plan->placement == old)
                      declare(plan, s.span);
                    if (site.dest) {
                      auto &ph = plan->layout.placeholders;
                      if (std::find(ph.begin(), ph.end(), *site.dest) == ph.end())
                        throw InternalError("spawn destination `" + *site.dest +
                                            "` is not a placeholder of " + plan->handle);
                      dest = ClosureField{plan->handle, *site.dest};
                    } else {
                      dest = CounterOnly{plan->handle};
                    }
                  } else if (site.dest) {
                    throw InternalError("value spawn forwarded to the parent");
                  }
                  blk.stmts.push_back(Stmt{SpawnTask{site.callee, std::move(args), dest}, s.span});
                },
            },
            s.node);
      }
      for (auto *p : declared)
        if (p->placement == old)
          declare(p, src.term.span);

      blk.term.span = src.term.span;
      blk.term.node = std::visit(
          Overloaded{
              [&](const IfTerm &x) -> decltype(blk.term.node) {
                return IfTerm{x.cond, target(x.then_block), target(x.else_block)};
              },
              [&](const GotoTerm &x) -> decltype(blk.term.node) { return GotoTerm{target(x.target)}; },
              [&](const WhileTerm &x) -> decltype(blk.term.node) {
                return WhileTerm{x.cond, target(x.body), target(x.exit)};
              },
              [&](const ReturnTerm &x) -> decltype(blk.term.node) { return x; },
              [&](const SyncTerm &) -> decltype(blk.term.node) {
                auto &plan = plans.at(old);
                if (plan.forwarded)
                  return ReturnTerm{nullptr};
                return SpawnNextTerm{plan.handle};
              },
          },
          src.term.node);
      task.blocks.push_back(std::move(blk));
    }
    out.push_back(std::move(task));
  }
  return out;
}

ExplicitProgram lowerProgram(const ImplicitProgram &program) {
  ExplicitProgram out;
  out.entry = program.entry;
  for (auto &fn : program.functions)
    for (auto &t : lowerFunction(fn))
      out.tasks.push_back(std::move(t));
  return out;
}

SystemRelations analyzeRelations(const ExplicitProgram &program) {
  static const std::string kHost = "@host";
  SystemRelations rel;
  // edges along which a task's destinations flow into another task
  std::vector<std::pair<std::string, std::string>> inherit;
  for (auto &t : program.tasks) {
    auto &r = rel[t.name];
    r.is_root = t.name == program.entry;
    if (r.is_root)
      r.send_arguments_to.insert(kHost);
  }
  for (auto &t : program.tasks) {
    auto &r = rel[t.name];
    for (auto &b : t.blocks) {
      for (auto &s : b.stmts) {
        auto *sp = std::get_if<SpawnTask>(&s.node);
        if (!sp)
          continue;
        r.spawns.insert(sp->callee);
        std::visit(Overloaded{
                       [&](const ClosureField &d) {
                         rel[sp->callee].send_arguments_to.insert(t.closure(d.handle).continuation);
                       },
                       [&](const CounterOnly &d) {
                         rel[sp->callee].send_arguments_to.insert(t.closure(d.handle).continuation);
                       },
                       [&](const ParentDest &) { inherit.emplace_back(t.name, sp->callee); },
                   },
                   sp->dest);
      }
      if (auto *sn = std::get_if<SpawnNextTerm>(&b.term.node)) {
        auto &cont = t.closure(sn->handle).continuation;
        r.spawn_nexts.insert(cont);
        inherit.emplace_back(t.name, cont);
      }
    }
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (auto &[from, to] : inherit) {
      auto src = rel[from].send_arguments_to;
      auto &dst = rel[to].send_arguments_to;
      for (auto &x : src)
        changed |= dst.insert(x).second;
    }
  }
  for (auto &[_, r] : rel)
    r.returns_to_host = r.send_arguments_to.erase(kHost) > 0;
  return rel;
}

std::vector<std::string> reachableTasks(const ExplicitProgram &program) {
  auto rel = analyzeRelations(program);
  std::set<std::string> seen{program.entry};
  std::deque<std::string> work{program.entry};
  while (!work.empty()) {
    auto t = work.front();
    work.pop_front();
    auto &r = rel[t];
    for (auto *set : {&r.spawns, &r.spawn_nexts})
      for (auto &x : *set)
        if (seen.insert(x).second)
          work.push_back(x);
  }
  std::vector<std::string> out;
  for (auto &t : program.tasks)
    if (seen.count(t.name))
      out.push_back(t.name);
  return out;
}

namespace {

std::string destText(const SpawnDest &d) {
  return std::visit(Overloaded{
                        [](const ClosureField &x) { return x.handle + ".@" + x.field; },
                        [](const CounterOnly &x) { return x.handle + ".#count"; },
                        [](const ParentDest &) { return std::string("^parent"); },
                    },
                    d);
}

std::string closureText(const std::string &handle, const ClosureLayout &c) {
  std::string out = "closure " + handle + ": " + c.continuation + " {";
  std::vector<std::string> fields;
  if (c.has_return_dest)
    fields.push_back("@ret");
  for (auto &r : c.ready_args)
    fields.push_back(r);
  for (auto &p : c.placeholders)
    fields.push_back("?" + p);
  for (size_t i = 0; i < fields.size(); ++i)
    out += (i ? ", " : " ") + fields[i];
  out += " } join ";
  out += c.join.kind == JoinPolicy::Static ? "static(" + std::to_string(c.join.count) + ")"
                                           : std::string("dynamic");
  out += ", " + std::to_string(c.payload_bits) + "/" + std::to_string(c.padded_bits) + " bits";
  return out;
}

} // namespace

std::string dump(const ExplicitTask &task) {
  using frontend::printExpr;
  std::string out = "task " + task.name + "(";
  for (size_t i = 0; i < task.params.size(); ++i)
    out += (i ? ", " : "") + task.params[i];
  out += task.returns_value ? ") -> i64" : ") -> void";
  if (task.is_continuation)
    out += "  [continuation of " + task.origin + "]";
  out += "\n";
  for (auto &b : task.blocks) {
    out += "  b" + std::to_string(b.id) + ":\n";
    for (auto &s : b.stmts) {
      out += "    ";
      out += std::visit(
          Overloaded{
              [](const Let &x) { return "let " + x.name + " = " + printExpr(*x.value); },
              [](const Assign &x) { return x.name + " = " + printExpr(*x.value); },
              [](const MemStore &x) {
                return "mem[" + printExpr(*x.addr) + "] = " + printExpr(*x.value);
              },
              [&](const DeclareClosure &x) { return closureText(x.handle, task.closure(x.handle)); },
              [](const SpawnTask &x) {
                std::string a;
                for (size_t i = 0; i < x.args.size(); ++i)
                  a += (i ? ", " : "") + printExpr(*x.args[i]);
                return "spawn " + x.callee + "(" + a + ") -> " + destText(x.dest);
              },
          },
          s.node);
      out += "\n";
    }
    out += "    T: ";
    out += std::visit(
        Overloaded{
            [](const IfTerm &x) {
              return "if " + printExpr(*x.cond) + " then b" + std::to_string(x.then_block) +
                     " else b" + std::to_string(x.else_block);
            },
            [](const GotoTerm &x) { return "goto b" + std::to_string(x.target); },
            [](const WhileTerm &x) {
              return "while " + printExpr(*x.cond) + " do b" + std::to_string(x.body) + " exit b" +
                     std::to_string(x.exit);
            },
            [](const ReturnTerm &x) {
              return x.value ? "return " + printExpr(*x.value) : std::string("return");
            },
            [](const SpawnNextTerm &x) { return "spawn_next " + x.handle; },
        },
        b.term.node);
    out += "\n";
  }
  return out;
}

std::string dump(const ExplicitProgram &program) {
  std::string out;
  for (size_t i = 0; i < program.tasks.size(); ++i) {
    if (i)
      out += '\n';
    out += dump(program.tasks[i]);
  }
  return out;
}

} // namespace cocoon::cps
