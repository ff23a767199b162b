#include "cocoon/frontend/sema.hpp"
#include "cocoon/overloaded.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cocoon::frontend {

namespace {

using namespace cocoon::ast;

bool terminates(const Block &b) {
  if (b.empty())
    return false;
  auto &last = b.back().node;
  if (std::holds_alternative<Return>(last))
    return true;
  if (auto *i = std::get_if<If>(&last))
    return terminates(i->then_block) && terminates(i->else_block);
  return false;
}

bool isSpawn(const Stmt &s) {
  return std::holds_alternative<SpawnAssign>(s.node) || std::holds_alternative<SpawnVoid>(s.node);
}

// ---- implicit sync insertion ----

// Returns whether spawns may be outstanding when control falls out of `b`.
bool pendingAfter(const Block &b, bool pending) {
  for (auto &s : b) {
    if (isSpawn(s)) {
      pending = true;
    } else if (std::holds_alternative<Sync>(s.node)) {
      pending = false;
    } else if (auto *i = std::get_if<If>(&s.node)) {
      bool t = pendingAfter(i->then_block, pending) && !terminates(i->then_block);
      bool e = pendingAfter(i->else_block, pending) && !terminates(i->else_block);
      pending = t || e;
    } else if (auto *w = std::get_if<While>(&s.node)) {
      pending = pending || pendingAfter(w->body, pending) || pendingAfter(w->body, true);
    } else if (std::holds_alternative<Return>(s.node)) {
      return pending;
    }
  }
  return pending;
}

Block insertSyncs(const Block &b, bool pending) {
  Block out;
  out.reserve(b.size());
  for (auto &s : b) {
    if (isSpawn(s)) {
      pending = true;
      out.push_back(s);
    } else if (std::holds_alternative<Sync>(s.node)) {
      pending = false;
      out.push_back(s);
    } else if (auto *i = std::get_if<If>(&s.node)) {
      If copy{i->cond, insertSyncs(i->then_block, pending), insertSyncs(i->else_block, pending)};
      bool t = pendingAfter(i->then_block, pending) && !terminates(i->then_block);
      bool e = pendingAfter(i->else_block, pending) && !terminates(i->else_block);
      pending = t || e;
      out.push_back(Stmt{std::move(copy), s.span});
    } else if (auto *w = std::get_if<While>(&s.node)) {
      // the body may run after an iteration that left spawns behind
      bool entry = pending || pendingAfter(w->body, pending);
      out.push_back(Stmt{While{w->cond, insertSyncs(w->body, entry)}, s.span});
      pending = entry;
    } else if (std::holds_alternative<Return>(s.node)) {
      if (pending)
        out.push_back(Stmt{Sync{}, s.span});
      pending = false;
      out.push_back(s);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

// ---- validation ----

struct FunctionInfo {
  size_t arity;
  bool returns_value;
  bool is_task;
};

class Validator {
public:
  Validator(const Program &p, Diagnostics &diags) : prog_(p), diags_(diags) {
    for (auto &f : p.functions)
      fns_.emplace(f.name, FunctionInfo{f.params.size(), f.returns_value, f.is_task});
  }

  void run() {
    std::set<std::string> seen;
    for (auto &f : prog_.functions) {
      if (!seen.insert(f.name).second)
        report(f.span, "duplicate function `" + f.name + "`");
      if (f.name.find("__") != std::string::npos)
        report(f.span, "function name `" + f.name + "` uses `__`, which is reserved for generated tasks");
    }
    if (!prog_.find(prog_.entry))
      report(Span{1, 1, 0, 0}, "entry function `" + prog_.entry + "` is not declared");
    for (auto &f : prog_.functions)
      function(f);
  }

private:
  const Program &prog_;
  Diagnostics &diags_;
  std::map<std::string, FunctionInfo> fns_;
  const FunctionDecl *fn_ = nullptr;
  std::vector<std::set<std::string>> scopes_;
  int loopDepth_ = 0;

  void report(Span s, std::string msg) { diags_.push_back(Diagnostic{s, std::move(msg)}); }

  void function(const FunctionDecl &f) {
    fn_ = &f;
    scopes_.assign(1, {});
    for (auto &p : f.params)
      if (!scopes_.back().insert(p.name).second)
        report(p.span, "duplicate parameter `" + p.name + "` in `" + f.name + "`");
    block(f.body, /*newScope=*/false);
    if (f.returns_value && !terminates(f.body))
      report(f.span, "function `" + f.name + "` does not return a value on every path");
    std::set<std::string> pending;
    pendingWalk(f.body, pending, true);
  }

  bool visible(const std::string &name) const {
    return std::any_of(scopes_.begin(), scopes_.end(),
                       [&](auto &s) { return s.count(name) > 0; });
  }

  void use(const Expr &e) {
    for (auto &v : freeVars(e))
      if (!visible(v))
        report(e.span, "use of undeclared variable `" + v + "`");
  }

  void declare(const std::string &name, Span span) {
    if (!scopes_.back().count(name) && visible(name))
      report(span, "`" + name + "` shadows a variable of an enclosing scope");
    scopes_.back().insert(name);
  }

  void assignTo(const std::string &name, Span span) {
    if (!visible(name))
      report(span, "assignment to undeclared variable `" + name + "`");
  }

  void spawnTarget(const std::string &callee, size_t nargs, bool wantsValue, Span span) {
    auto it = fns_.find(callee);
    if (it == fns_.end()) {
      report(span, "unresolved spawn target `" + callee + "`");
      return;
    }
    if (!it->second.is_task)
      report(span, "spawn target `" + callee + "` is not a task function");
    if (it->second.arity != nargs)
      report(span, "`" + callee + "` expects " + std::to_string(it->second.arity) +
                       " argument(s), got " + std::to_string(nargs));
    if (wantsValue && !it->second.returns_value)
      report(span, "cannot assign the result of void task `" + callee + "`");
  }

  void block(const Block &b, bool newScope = true) {
    if (newScope)
      scopes_.emplace_back();
    bool dead = false;
    for (auto &s : b) {
      if (dead) {
        report(s.span, "unreachable statement");
        break;
      }
      stmt(s);
      dead = terminates(Block{s});
    }
    if (newScope)
      scopes_.pop_back();
  }

  void stmt(const Stmt &s) {
    std::visit(
        Overloaded{
            [&](const Let &x) {
              use(*x.value);
              declare(x.name, s.span);
            },
            [&](const Assign &x) {
              use(*x.value);
              assignTo(x.name, s.span);
            },
            [&](const SpawnAssign &x) {
              for (auto &a : x.args)
                use(*a);
              spawnTarget(x.callee, x.args.size(), true, s.span);
              if (x.declares)
                declare(x.dest, s.span);
              else
                assignTo(x.dest, s.span);
            },
            [&](const SpawnVoid &x) {
              for (auto &a : x.args)
                use(*a);
              spawnTarget(x.callee, x.args.size(), false, s.span);
            },
            [&](const Sync &) {
              if (loopDepth_ > 0)
                report(s.span, "`sync` inside a loop body is not supported");
            },
            [&](const If &x) {
              use(*x.cond);
              block(x.then_block);
              block(x.else_block);
            },
            [&](const While &x) {
              use(*x.cond);
              ++loopDepth_;
              block(x.body);
              --loopDepth_;
            },
            [&](const Return &x) {
              if (x.value) {
                use(*x.value);
                if (!fn_->returns_value)
                  report(s.span, "void function `" + fn_->name + "` cannot return a value");
              } else if (fn_->returns_value) {
                report(s.span, "function `" + fn_->name + "` must return a value");
              }
            },
            [&](const MemStore &x) {
              use(*x.addr);
              use(*x.value);
            },
            [&](const DaePragma &x) {
              const Stmt &inner = *x.inner;
              bool memory = std::visit(
                  Overloaded{
                      [](const Let &l) { return containsMemoryAccess(*l.value); },
                      [](const Assign &a) { return containsMemoryAccess(*a.value); },
                      [](const MemStore &) { return true; },
                      [](const auto &) { return false; },
                  },
                  inner.node);
              bool simple = std::holds_alternative<Let>(inner.node) ||
                            std::holds_alternative<Assign>(inner.node) ||
                            std::holds_alternative<MemStore>(inner.node);
              if (!simple)
                report(s.span, "DAE pragma must precede a let, an assignment or a memory store");
              else if (!memory)
                report(s.span, "DAE pragma requires a memory access");
              stmt(inner);
            },
        },
        s.node);
  }

  // Spawn results may be neither read nor overwritten until the next sync.
  std::set<std::string> pendingWalk(const Block &b, std::set<std::string> pending,
                                    bool reportErrors) {
    auto reads = [&](const Expr &e, Span span) {
      if (!reportErrors)
        return;
      for (auto &v : freeVars(e))
        if (pending.count(v))
          report(span, "spawn result `" + v + "` is read before `sync`");
    };
    auto writes = [&](const std::string &v, Span span) {
      if (reportErrors && pending.count(v))
        report(span, "spawn destination `" + v + "` is reassigned before `sync`");
    };
    for (auto &s : b) {
      const Stmt &st =
          std::holds_alternative<DaePragma>(s.node) ? *std::get<DaePragma>(s.node).inner : s;
      std::visit(Overloaded{
                     [&](const Let &x) {
                       reads(*x.value, s.span);
                       writes(x.name, s.span);
                     },
                     [&](const Assign &x) {
                       reads(*x.value, s.span);
                       writes(x.name, s.span);
                     },
                     [&](const SpawnAssign &x) {
                       for (auto &a : x.args)
                         reads(*a, s.span);
                       writes(x.dest, s.span);
                       pending.insert(x.dest);
                     },
                     [&](const SpawnVoid &x) {
                       for (auto &a : x.args)
                         reads(*a, s.span);
                     },
                     [&](const Sync &) { pending.clear(); },
                     [&](const If &x) {
                       reads(*x.cond, s.span);
                       auto t = pendingWalk(x.then_block, pending, reportErrors);
                       auto e = pendingWalk(x.else_block, pending, reportErrors);
                       pending.clear();
                       if (!terminates(x.then_block))
                         pending.insert(t.begin(), t.end());
                       if (!terminates(x.else_block))
                         pending.insert(e.begin(), e.end());
                     },
                     [&](const While &x) {
                       auto entry = pending;
                       for (;;) {
                         auto after = pendingWalk(x.body, entry, false);
                         size_t before = entry.size();
                         entry.insert(after.begin(), after.end());
                         if (entry.size() == before)
                           break;
                       }
                       pending = entry;
                       reads(*x.cond, s.span);
                       pendingWalk(x.body, entry, reportErrors);
                     },
                     [&](const Return &x) {
                       if (x.value)
                         reads(*x.value, s.span);
                     },
                     [&](const MemStore &x) {
                       reads(*x.addr, s.span);
                       reads(*x.value, s.span);
                     },
                     [&](const DaePragma &) {},
                 },
                 st.node);
    }
    return pending;
  }
};

} // namespace

Program normalize(const Program &program) {
  Program out = program;
  for (auto &f : out.functions) {
    bool fallsThrough = !terminates(f.body);
    bool pendingAtEnd = fallsThrough && pendingAfter(f.body, false);
    f.body = insertSyncs(f.body, false);
    if (pendingAtEnd)
      f.body.push_back(Stmt{Sync{}, f.span});
  }
  return out;
}

Diagnostics validate(const Program &program) {
  Diagnostics diags;
  Program normalized = normalize(program);
  Validator(normalized, diags).run();
  return diags;
}

} // namespace cocoon::frontend
