#pragma once

// Compact executable form shared by the oracle, the parallel executor and
// the simulator: variables become slot indices and expressions become
// postfix code. The interpreter is parameterised on a Host that supplies
// memory, spawning and closure handling.

#include "cocoon/cps/explicit.hpp"
#include "cocoon/ir/implicit.hpp"
#include "cocoon/runtime/memory.hpp"

#include <climits>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cocoon::runtime {

constexpr uint32_t kNone = UINT32_MAX;

enum class Op : uint8_t {
  Const, Slot, Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, Neg, Not,
  Load, Xchg,
  AndJump, // top == 0: keep it and jump; else pop
  OrJump,  // top != 0: replace with 1 and jump; else pop
  Bool,    // top = top != 0
};

struct Instr {
  Op op;
  uint32_t arg = 0; // slot or jump target
  int64_t imm = 0;
};

struct Code {
  std::vector<Instr> ops;
  uint32_t depth = 0; // maximum stack depth
};

struct XDest {
  enum Kind : uint8_t { Direct, Field, Counter, Parent } kind = Direct;
  uint32_t closure = kNone;
  uint32_t slot = 0; // index into the closure's values (return destination excluded)
};

struct XStmt {
  enum Kind : uint8_t { Set, Store, Spawn, Declare } kind = Set;
  uint32_t target = kNone; // Set: slot. Spawn: result slot or kNone. Declare: closure.
  uint32_t callee = kNone;
  Code a, b;
  std::vector<Code> args;
  XDest dest;
};

struct XTerm {
  enum Kind : uint8_t { Branch, Jump, Return, Next } kind = Return;
  Code value; // condition or return value
  bool has_value = false;
  bool counted = true; // whether it costs a statement
  uint32_t t = 0, e = 0;
  uint32_t closure = kNone;
};

struct XBlock {
  std::vector<XStmt> stmts;
  XTerm term;
};

struct XClosure {
  std::string handle;
  uint32_t cont = kNone;
  uint32_t nvalues = 0; // ready args + placeholders
  std::vector<uint32_t> ready_src; // task slots copied in at spawn_next
  uint32_t nplaceholders = 0;
  bool dynamic = false;
  uint32_t static_count = 0;
};

struct XFunc {
  std::string name;
  uint32_t nparams = 0;
  uint32_t nslots = 0;
  bool returns_value = false;
  bool is_access = false;
  std::vector<XBlock> blocks;
  std::vector<XClosure> closures;
  std::vector<std::string> slot_names;
};

struct XProgram {
  std::vector<XFunc> funcs;
  uint32_t entry = 0;

  std::optional<uint32_t> index(std::string_view name) const;
};

/// Spawns call their callee directly and syncs fall through.
XProgram compileImplicit(const ir::ImplicitProgram &program);
XProgram compileExplicit(const cps::ExplicitProgram &program);

// ---- arithmetic: two's-complement wrapping, trapped division ----

inline int64_t wrapAdd(int64_t a, int64_t b) { return int64_t(uint64_t(a) + uint64_t(b)); }
inline int64_t wrapSub(int64_t a, int64_t b) { return int64_t(uint64_t(a) - uint64_t(b)); }
inline int64_t wrapMul(int64_t a, int64_t b) { return int64_t(uint64_t(a) * uint64_t(b)); }
inline int64_t checkedDiv(int64_t a, int64_t b) {
  if (b == 0)
    throw RuntimeError("division by zero");
  if (a == INT64_MIN && b == -1)
    return INT64_MIN;
  return a / b;
}
inline int64_t checkedMod(int64_t a, int64_t b) {
  if (b == 0)
    throw RuntimeError("modulo by zero");
  if (b == -1)
    return 0;
  return a % b;
}

template <class Host> int64_t eval(const Code &code, const int64_t *slots, Host &host) {
  int64_t small[32] = {};
  std::vector<int64_t> big;
  int64_t *st = small;
  if (code.depth > 32) {
    big.resize(code.depth);
    st = big.data();
  }
  size_t sp = 0;
  const Instr *ops = code.ops.data();
  size_t n = code.ops.size();
  for (size_t pc = 0; pc < n; ++pc) {
    const Instr &in = ops[pc];
    switch (in.op) {
    case Op::Const: st[sp++] = in.imm; break;
    case Op::Slot: st[sp++] = slots[in.arg]; break;
    case Op::Add: --sp; st[sp - 1] = wrapAdd(st[sp - 1], st[sp]); break;
    case Op::Sub: --sp; st[sp - 1] = wrapSub(st[sp - 1], st[sp]); break;
    case Op::Mul: --sp; st[sp - 1] = wrapMul(st[sp - 1], st[sp]); break;
    case Op::Div: --sp; st[sp - 1] = checkedDiv(st[sp - 1], st[sp]); break;
    case Op::Mod: --sp; st[sp - 1] = checkedMod(st[sp - 1], st[sp]); break;
    case Op::Eq: --sp; st[sp - 1] = st[sp - 1] == st[sp]; break;
    case Op::Ne: --sp; st[sp - 1] = st[sp - 1] != st[sp]; break;
    case Op::Lt: --sp; st[sp - 1] = st[sp - 1] < st[sp]; break;
    case Op::Le: --sp; st[sp - 1] = st[sp - 1] <= st[sp]; break;
    case Op::Gt: --sp; st[sp - 1] = st[sp - 1] > st[sp]; break;
    case Op::Ge: --sp; st[sp - 1] = st[sp - 1] >= st[sp]; break;
    case Op::Neg: st[sp - 1] = wrapSub(0, st[sp - 1]); break;
    case Op::Not: st[sp - 1] = st[sp - 1] == 0; break;
    case Op::Load: st[sp - 1] = host.load(st[sp - 1]); break;
    case Op::Xchg: --sp; st[sp - 1] = host.exchange(st[sp - 1], st[sp]); break;
    case Op::AndJump:
      if (st[sp - 1] == 0)
        pc = in.arg - 1;
      else
        --sp;
      break;
    case Op::OrJump:
      if (st[sp - 1] != 0) {
        st[sp - 1] = 1;
        pc = in.arg - 1;
      } else {
        --sp;
      }
      break;
    case Op::Bool: st[sp - 1] = st[sp - 1] != 0; break;
    }
  }
  return st[0];
}

struct Outcome {
  enum Kind { Returned, SpawnedNext } kind = Returned;
  bool has_value = false;
  int64_t value = 0;
};

/// Runs one task body to its end. Host must provide:
///   load/exchange/store for memory, step() per counted statement,
///   spawn(stmt, args, slots), declare(closure), spawnNext(closure, slots).
template <class Host>
Outcome execute(const XFunc &fn, int64_t *slots, Host &host) {
  uint32_t b = 0;
  int64_t argbuf[16];
  std::vector<int64_t> bigArgs;
  for (;;) {
    const XBlock &blk = fn.blocks[b];
    for (const XStmt &s : blk.stmts) {
      switch (s.kind) {
      case XStmt::Set:
        host.step();
        slots[s.target] = eval(s.a, slots, host);
        break;
      case XStmt::Store: {
        host.step();
        int64_t addr = eval(s.a, slots, host);
        int64_t value = eval(s.b, slots, host);
        host.store(addr, value);
        break;
      }
      case XStmt::Spawn: {
        host.step();
        int64_t *args = argbuf;
        if (s.args.size() > 16) {
          bigArgs.resize(s.args.size());
          args = bigArgs.data();
        }
        for (size_t i = 0; i < s.args.size(); ++i)
          args[i] = eval(s.args[i], slots, host);
        host.spawn(s, args, slots);
        break;
      }
      case XStmt::Declare:
        host.declare(s.target);
        break;
      }
    }
    const XTerm &t = blk.term;
    if (t.counted)
      host.step();
    switch (t.kind) {
    case XTerm::Branch:
      b = eval(t.value, slots, host) != 0 ? t.t : t.e;
      break;
    case XTerm::Jump:
      b = t.t;
      break;
    case XTerm::Return: {
      Outcome o;
      if (t.has_value) {
        o.has_value = true;
        o.value = eval(t.value, slots, host);
      }
      return o;
    }
    case XTerm::Next:
      host.spawnNext(t.closure, slots);
      return Outcome{Outcome::SpawnedNext, false, 0};
    }
  }
}

} // namespace cocoon::runtime
