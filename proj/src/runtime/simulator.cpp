#include "cocoon/runtime/simulator.hpp"
#include "cocoon/runtime/exec.hpp"

#include <algorithm>
#include <memory>
#include <queue>

namespace cocoon::runtime {

namespace {

struct SimClosure;

struct SimDest {
  SimClosure *closure = nullptr;
  int32_t slot = -1;
};

struct SimClosure {
  uint64_t id = 0;
  const XClosure *layout = nullptr; // null for the root sink
  int64_t state = 0;                // 2 * outstanding + (next issued ? 0 : 1)
  uint32_t expected = 0;
  uint32_t received = 0;
  uint64_t ready_time = 0;
  SimDest ret;
  std::vector<int64_t> values;
  std::vector<bool> written;
};

struct SimTask {
  uint32_t func;
  std::vector<int64_t> args;
  SimDest dest;
};

struct Event {
  uint64_t time;
  uint64_t seq;
  size_t task; // index into the task pool

  bool operator>(const Event &o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

class Simulator;

// Records what a task does; the effects are applied once its finish time is known.
class SimHost {
public:
  struct Action {
    enum Kind { Spawn, Next } kind;
    SimTask task; // Spawn
    SimClosure *closure = nullptr;
  };

  SimHost(Simulator &sim, const XFunc &fn, const SimTask &task) : sim_(sim), fn_(fn), task_(task) {}

  int64_t load(int64_t a);
  int64_t exchange(int64_t a, int64_t v);
  void store(int64_t a, int64_t v);
  void step();
  void spawn(const XStmt &st, const int64_t *args, int64_t *);
  void declare(uint32_t idx);
  void spawnNext(uint32_t idx, const int64_t *slots);

  uint64_t steps = 0;
  uint64_t memOps = 0;
  std::vector<Action> actions;

private:
  Simulator &sim_;
  const XFunc &fn_;
  const SimTask &task_;
  std::vector<SimClosure *> closures_ = std::vector<SimClosure *>(fn_.closures.size(), nullptr);
};

class Simulator {
public:
  Simulator(const XProgram &prog, Memory &mem, const CostConfig &cost)
      : prog_(prog), mem_(mem), cost_(cost) {
    for (auto &[name, n] : cost.pe_counts) {
      if (!prog.index(name))
        throw RuntimeError("--pe names unknown task `" + name + "`");
      if (n == 0)
        throw RuntimeError("task `" + name + "` needs at least one PE");
    }
    for (auto &f : prog.funcs) {
      auto it = cost.pe_counts.find(f.name);
      pools_.emplace_back(it == cost.pe_counts.end() ? 1 : it->second, 0);
    }
    busy_.assign(prog.funcs.size(), 0);
    executed_.assign(prog.funcs.size(), 0);
  }

  SimResult run(std::span<const int64_t> args) {
    const XFunc &entry = prog_.funcs[prog_.entry];
    if (entry.nparams != args.size())
      throw RuntimeError("`" + entry.name + "` expects " + std::to_string(entry.nparams) +
                         " argument(s), got " + std::to_string(args.size()));
    root_.values.assign(1, 0);
    root_.written.assign(1, false);
    root_.state = 2;
    root_.expected = 1;
    enqueue(0, SimTask{prog_.entry, {args.begin(), args.end()},
                       SimDest{&root_, entry.returns_value ? 0 : -1}});

    std::vector<int64_t> slots;
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      SimTask task = std::move(tasks_[ev.task]);
      freeSlots_.push_back(ev.task);
      dispatch(ev.time, task, slots);
    }
    if (!rootDone_)
      throw RuntimeError("deadlock: simulation ran out of events before the root result arrived");
    if (!live_.empty())
      throw RuntimeError("simulation finished with " + std::to_string(live_.size()) +
                         " closure(s) never retired");

    SimResult r;
    if (entry.returns_value)
      r.value = root_.values[0];
    r.makespan = makespan_;
    for (size_t f = 0; f < prog_.funcs.size(); ++f) {
      auto &name = prog_.funcs[f].name;
      r.pes[name] = unsigned(pools_[f].size());
      if (executed_[f])
        r.tasks_executed[name] = executed_[f];
      double capacity = double(pools_[f].size()) * double(makespan_);
      r.utilization[name] = capacity > 0 ? double(busy_[f]) / capacity : 0.0;
    }
    return r;
  }

private:
  friend class SimHost;

  const XProgram &prog_;
  Memory &mem_;
  CostConfig cost_;
  std::vector<std::vector<uint64_t>> pools_; // per task type: time each PE frees up
  std::vector<uint64_t> busy_;
  std::vector<uint64_t> executed_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::vector<SimTask> tasks_;
  std::vector<size_t> freeSlots_;
  std::map<uint64_t, std::unique_ptr<SimClosure>> live_;
  SimClosure root_;
  uint64_t seq_ = 0;
  uint64_t nextId_ = 1;
  uint64_t steps_ = 0;
  uint64_t makespan_ = 0;
  bool rootDone_ = false;

  void enqueue(uint64_t time, SimTask t) {
    size_t slot;
    if (!freeSlots_.empty()) {
      slot = freeSlots_.back();
      freeSlots_.pop_back();
      tasks_[slot] = std::move(t);
    } else {
      slot = tasks_.size();
      tasks_.push_back(std::move(t));
    }
    events_.push(Event{time, seq_++, slot});
  }

  SimClosure *declare(const XClosure &layout) {
    auto c = std::make_unique<SimClosure>();
    c->id = nextId_++;
    c->layout = &layout;
    c->values.assign(layout.nvalues, 0);
    c->written.assign(layout.nvalues, false);
    if (layout.dynamic) {
      c->state = 1;
    } else {
      c->state = 2 * int64_t(layout.static_count) + 1;
      c->expected = layout.static_count;
    }
    auto *raw = c.get();
    live_.emplace(raw->id, std::move(c));
    return raw;
  }

  static void expectOneMore(SimClosure *c) {
    ++c->expected;
    c->state += 2;
  }

  void release(SimClosure *c, int64_t amount, uint64_t time) {
    c->ready_time = std::max(c->ready_time, time);
    c->state -= amount;
    if (c->state < 0)
      throw SafetyViolation("join counter underflow on closure #" + std::to_string(c->id));
    if (c->state == 0)
      retire(c);
  }

  void deliver(const SimDest &d, const Outcome &o, uint64_t time) {
    SimClosure *c = d.closure;
    if (d.slot >= 0) {
      if (!o.has_value)
        throw InternalError("void result delivered to a value field");
      if (c->written[d.slot])
        throw SafetyViolation("placeholder " + std::to_string(d.slot) + " of closure #" +
                           std::to_string(c->id) + " written twice");
      c->written[d.slot] = true;
      c->values[d.slot] = o.value;
    }
    ++c->received;
    release(c, 2, time);
  }

  void retire(SimClosure *c) {
    if (c->received != c->expected)
      throw SafetyViolation("closure #" + std::to_string(c->id) + " retired after " +
                         std::to_string(c->received) + " of " + std::to_string(c->expected) +
                         " results");
    if (c == &root_) {
      rootDone_ = true;
      makespan_ = c->ready_time;
      return;
    }
    auto &l = *c->layout;
    for (uint32_t i = l.nvalues - l.nplaceholders; i < l.nvalues; ++i)
      if (!c->written[i])
        throw SafetyViolation("closure #" + std::to_string(c->id) +
                           " became ready with an unfilled placeholder");
    SimTask t{l.cont, c->values, c->ret};
    uint64_t time = c->ready_time;
    live_.erase(c->id);
    enqueue(time, std::move(t));
  }

  void dispatch(uint64_t ready, const SimTask &task, std::vector<int64_t> &slots) {
    const XFunc &fn = prog_.funcs[task.func];
    auto &pool = pools_[task.func];
    auto pe = std::min_element(pool.begin(), pool.end());
    uint64_t start = std::max(ready, *pe);

    slots.assign(fn.nslots, 0);
    std::copy(task.args.begin(), task.args.end(), slots.begin());
    SimHost host(*this, fn, task);
    Outcome o = execute(fn, slots.data(), host);

    uint64_t issue = cost_.stmt_cost * host.steps;
    uint64_t memory = cost_.mem_latency * host.memOps;
    uint64_t duration = fn.is_access ? issue : issue + memory;
    uint64_t end = start + duration;
    *pe = end;
    busy_[task.func] += duration;
    ++executed_[task.func];

    for (auto &a : host.actions) {
      if (a.kind == SimHost::Action::Spawn)
        enqueue(end, std::move(a.task));
      else
        release(a.closure, 1, end);
    }
    if (o.kind == Outcome::Returned)
      deliver(task.dest, o, fn.is_access ? end + memory : end);
  }
};

int64_t SimHost::load(int64_t a) {
  ++memOps;
  return sim_.mem_.load(a);
}
int64_t SimHost::exchange(int64_t a, int64_t v) {
  ++memOps;
  return sim_.mem_.exchange(a, v);
}
void SimHost::store(int64_t a, int64_t v) {
  ++memOps;
  sim_.mem_.store(a, v);
}
void SimHost::step() {
  ++steps;
  if (sim_.cost_.max_steps && ++sim_.steps_ > sim_.cost_.max_steps)
    throw RuntimeError("step limit of " + std::to_string(sim_.cost_.max_steps) + " exceeded");
}

void SimHost::spawn(const XStmt &st, const int64_t *args, int64_t *) {
  SimTask child{st.callee, {args, args + st.args.size()}, {}};
  switch (st.dest.kind) {
  case XDest::Field:
  case XDest::Counter: {
    SimClosure *c = closures_.at(st.dest.closure);
    if (!c)
      throw InternalError("spawn into an undeclared closure");
    if (c->layout->dynamic)
      Simulator::expectOneMore(c);
    child.dest = SimDest{c, st.dest.kind == XDest::Field ? int32_t(st.dest.slot) : -1};
    break;
  }
  case XDest::Parent:
    Simulator::expectOneMore(task_.dest.closure);
    child.dest = task_.dest;
    break;
  case XDest::Direct:
    throw InternalError("direct spawn in explicit IR");
  }
  actions.push_back(Action{Action::Spawn, std::move(child), nullptr});
}

void SimHost::declare(uint32_t idx) { closures_.at(idx) = sim_.declare(fn_.closures[idx]); }

void SimHost::spawnNext(uint32_t idx, const int64_t *slots) {
  SimClosure *c = closures_.at(idx);
  if (!c)
    throw InternalError("spawn_next of an undeclared closure");
  auto &l = fn_.closures[idx];
  for (size_t i = 0; i < l.ready_src.size(); ++i)
    c->values[i] = slots[l.ready_src[i]];
  c->ret = task_.dest;
  actions.push_back(Action{Action::Next, {}, c});
}

} // namespace

SimResult simulate(const cps::ExplicitProgram &program, std::span<const int64_t> args,
                   Memory &memory, const CostConfig &cost) {
  XProgram prog = compileExplicit(program);
  Simulator sim(prog, memory, cost);
  return sim.run(args);
}

} // namespace cocoon::runtime
