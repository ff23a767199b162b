#include "cocoon/runtime/oracle.hpp"
#include "cocoon/runtime/exec.hpp"

namespace cocoon::runtime {

namespace {

void checkArity(const XFunc &fn, size_t n) {
  if (fn.nparams != n)
    throw RuntimeError("`" + fn.name + "` expects " + std::to_string(fn.nparams) +
                       " argument(s), got " + std::to_string(n));
}

class OracleHost {
public:
  OracleHost(const XProgram &prog, Memory &mem, const OracleLimits &limits)
      : calls_(prog.funcs.size(), 0), prog_(prog), mem_(mem), limits_(limits) {}

  Outcome call(uint32_t f, const int64_t *args, size_t nargs) {
    const XFunc &fn = prog_.funcs[f];
    checkArity(fn, nargs);
    if (++depth_ > limits_.max_depth)
      throw RuntimeError("recursion depth limit of " + std::to_string(limits_.max_depth) +
                         " exceeded");
    ++calls_[f];
    std::vector<int64_t> slots(fn.nslots, 0);
    std::copy(args, args + nargs, slots.begin());
    Outcome o = execute(fn, slots.data(), *this);
    --depth_;
    return o;
  }

  int64_t load(int64_t a) {
    ++memOps_;
    return mem_.load(a);
  }
  int64_t exchange(int64_t a, int64_t v) {
    ++memOps_;
    return mem_.exchange(a, v);
  }
  void store(int64_t a, int64_t v) {
    ++memOps_;
    mem_.store(a, v);
  }
  void step() {
    if (++steps_ > limits_.max_steps)
      throw RuntimeError("step limit of " + std::to_string(limits_.max_steps) + " exceeded");
  }
  void spawn(const XStmt &s, const int64_t *args, int64_t *slots) {
    Outcome o = call(s.callee, args, s.args.size());
    if (s.target != kNone)
      slots[s.target] = o.value;
  }
  void declare(uint32_t) { throw InternalError("closure in implicit IR"); }
  void spawnNext(uint32_t, const int64_t *) { throw InternalError("spawn_next in implicit IR"); }

  uint64_t steps_ = 0;
  uint64_t memOps_ = 0;
  std::vector<uint64_t> calls_;

private:
  const XProgram &prog_;
  Memory &mem_;
  OracleLimits limits_;
  uint32_t depth_ = 0;
};

} // namespace

OracleResult runOracle(const ir::ImplicitProgram &program, std::span<const int64_t> args,
                       Memory &memory, const OracleLimits &limits) {
  XProgram prog = compileImplicit(program);
  OracleHost host(prog, memory, limits);
  Outcome o = host.call(prog.entry, args.data(), args.size());
  OracleResult r;
  if (o.has_value)
    r.value = o.value;
  r.steps = host.steps_;
  r.mem_ops = host.memOps_;
  for (size_t i = 0; i < prog.funcs.size(); ++i)
    if (host.calls_[i])
      r.calls[prog.funcs[i].name] = host.calls_[i];
  return r;
}

} // namespace cocoon::runtime
