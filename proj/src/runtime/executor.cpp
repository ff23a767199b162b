#include "cocoon/runtime/executor.hpp"
#include "cocoon/runtime/exec.hpp"

#include <array>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace cocoon::runtime {

namespace {

struct Closure;

/// Where a finished task delivers: a value slot, or only the join counter
/// when `slot` is negative.
struct Dest {
  Closure *closure = nullptr;
  int32_t slot = -1;
};

// The join state packs two facts: state = 2 * outstanding + (next issued ? 0 : 1).
// A closure is ready exactly when the state reaches zero.
struct Closure {
  uint64_t id = 0;
  const XClosure *layout = nullptr; // null for the root sink
  std::atomic<int64_t> state{0};
  std::atomic<uint32_t> expected{0};
  std::atomic<uint32_t> received{0};
  Dest ret;
  std::unique_ptr<int64_t[]> values;
  std::unique_ptr<std::atomic<uint8_t>[]> written;
  uint32_t nvalues = 0;
};

struct Task {
  uint32_t func = 0;
  uint32_t nargs = 0;
  Dest dest;
  std::array<int64_t, 6> inline_{};
  std::unique_ptr<int64_t[]> heap;

  void setArgs(const int64_t *a, size_t n) {
    nargs = uint32_t(n);
    int64_t *d = inline_.data();
    if (n > inline_.size()) {
      heap = std::make_unique<int64_t[]>(n);
      d = heap.get();
    }
    std::copy(a, a + n, d);
  }
  const int64_t *args() const { return heap ? heap.get() : inline_.data(); }
};

struct alignas(64) WorkerQueue {
  std::mutex mu;
  std::deque<Task> tasks;
};

struct WorkerStats {
  std::vector<uint64_t> tasks;
  uint64_t steals = 0, spawns = 0, spawnNexts = 0, sends = 0, closures = 0, steps = 0, memOps = 0;
};

constexpr size_t kShards = 16;

class Scheduler {
public:
  Scheduler(const XProgram &prog, Memory &mem, const ExecConfig &cfg)
      : prog_(prog), mem_(mem), cfg_(cfg), stats_(cfg.workers) {
    for (unsigned i = 0; i < cfg.workers; ++i) {
      queues_.push_back(std::make_unique<WorkerQueue>());
      stats_[i].tasks.assign(prog.funcs.size(), 0);
    }
  }

  ~Scheduler() {
    for (auto &shard : table_)
      for (auto &[_, c] : shard.map)
        delete c;
  }

  ExecResult run(std::span<const int64_t> args) {
    const XFunc &entry = prog_.funcs[prog_.entry];
    if (entry.nparams != args.size())
      throw RuntimeError("`" + entry.name + "` expects " + std::to_string(entry.nparams) +
                         " argument(s), got " + std::to_string(args.size()));
    root_.id = nextId_++;
    root_.nvalues = 1;
    root_.values = std::make_unique<int64_t[]>(1);
    root_.written = std::make_unique<std::atomic<uint8_t>[]>(1);
    root_.state = 2;
    root_.expected = 1;

    Task t;
    t.func = prog_.entry;
    t.setArgs(args.data(), args.size());
    t.dest = Dest{&root_, entry.returns_value ? 0 : -1};
    push(0, std::move(t));

    if (cfg_.workers == 1) {
      worker(0);
    } else {
      std::vector<std::thread> threads;
      for (unsigned w = 0; w < cfg_.workers; ++w)
        threads.emplace_back([this, w] { worker(w); });
      for (auto &th : threads)
        th.join();
    }
    if (error_)
      std::rethrow_exception(error_);
    if (liveClosures() != 0)
      throw RuntimeError("run finished with " + std::to_string(liveClosures()) +
                         " closure(s) never retired");

    ExecResult r;
    if (entry.returns_value)
      r.value = root_.values[0];
    for (auto &ws : stats_) {
      for (size_t f = 0; f < ws.tasks.size(); ++f)
        if (ws.tasks[f])
          r.stats.tasks_executed[prog_.funcs[f].name] += ws.tasks[f];
      r.stats.steals += ws.steals;
      r.stats.spawns += ws.spawns;
      r.stats.spawn_nexts += ws.spawnNexts;
      r.stats.sends += ws.sends;
      r.stats.closures_created += ws.closures;
      r.stats.steps += ws.steps;
      r.stats.mem_ops += ws.memOps;
    }
    return r;
  }

private:
  friend class WorkerHost;

  const XProgram &prog_;
  Memory &mem_;
  ExecConfig cfg_;
  std::vector<std::unique_ptr<WorkerQueue>> queues_;
  std::vector<WorkerStats> stats_;
  Closure root_;

  std::atomic<int64_t> queued_{0};
  std::atomic<int64_t> inFlight_{0}; // queued or running tasks
  std::atomic<bool> done_{false};
  std::atomic<bool> failed_{false};
  std::atomic<int> sleepers_{0};
  std::atomic<uint64_t> nextId_{1};
  std::atomic<uint64_t> globalSteps_{0};
  std::mutex sleepMu_;
  std::condition_variable sleepCv_;
  std::mutex errorMu_;
  std::exception_ptr error_;

  struct Shard {
    std::mutex mu;
    std::unordered_map<uint64_t, Closure *> map;
  };
  std::array<Shard, kShards> table_;

  size_t liveClosures() {
    size_t n = 0;
    for (auto &s : table_) {
      std::lock_guard lk(s.mu);
      n += s.map.size();
    }
    return n;
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lk(errorMu_);
      if (!error_)
        error_ = e;
    }
    failed_ = true;
    wakeAll();
  }

  void wakeAll() {
    std::lock_guard lk(sleepMu_);
    sleepCv_.notify_all();
  }

  void push(unsigned w, Task t) {
    inFlight_.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard lk(queues_[w]->mu);
      queues_[w]->tasks.push_back(std::move(t));
    }
    queued_.fetch_add(1);
    if (sleepers_.load() > 0) {
      std::lock_guard lk(sleepMu_);
      sleepCv_.notify_one();
    }
  }

  bool popLocal(unsigned w, Task &t) {
    auto &q = *queues_[w];
    std::lock_guard lk(q.mu);
    if (q.tasks.empty())
      return false;
    t = std::move(q.tasks.back());
    q.tasks.pop_back();
    queued_.fetch_sub(1);
    return true;
  }

  bool steal(unsigned w, std::mt19937_64 &rng, Task &t) {
    unsigned n = cfg_.workers;
    if (n < 2)
      return false;
    std::uniform_int_distribution<unsigned> pick(0, n - 2);
    for (unsigned attempt = 0; attempt < 2 * n; ++attempt) {
      unsigned v = pick(rng);
      if (v >= w)
        ++v;
      auto &q = *queues_[v];
      std::lock_guard lk(q.mu);
      if (q.tasks.empty())
        continue;
      t = std::move(q.tasks.front());
      q.tasks.pop_front();
      queued_.fetch_sub(1);
      ++stats_[w].steals;
      return true;
    }
    return false;
  }

  void worker(unsigned w) {
    std::seed_seq seq{cfg_.seed, uint64_t(w)};
    std::mt19937_64 rng(seq);
    std::vector<int64_t> slots;
    try {
      int idleRounds = 0;
      while (!done_.load() && !failed_.load()) {
        Task t;
        if (popLocal(w, t) || steal(w, rng, t)) {
          idleRounds = 0;
          runTask(w, t, slots);
          if (inFlight_.fetch_sub(1) == 1 && !done_.load())
            deadlock();
          continue;
        }
        if (++idleRounds < 8) {
          std::this_thread::yield();
          continue;
        }
        std::unique_lock lk(sleepMu_);
        ++sleepers_;
        sleepCv_.wait_for(lk, std::chrono::milliseconds(5), [&] {
          return queued_.load() > 0 || done_.load() || failed_.load();
        });
        --sleepers_;
      }
    } catch (...) {
      fail(std::current_exception());
    }
  }

  [[noreturn]] void deadlock() {
    std::ostringstream os;
    os << "deadlock: no task is runnable but the root result is missing; live closures:";
    size_t shown = 0;
    for (auto &s : table_) {
      std::lock_guard lk(s.mu);
      for (auto &[id, c] : s.map) {
        if (shown++ == 8) {
          os << " ...";
          break;
        }
        os << " #" << id << "(" << prog_.funcs[c->layout->cont].name
           << ", state=" << c->state.load() << ", received=" << c->received.load() << "/"
           << c->expected.load() << ")";
      }
    }
    throw RuntimeError(os.str());
  }

  Closure *declare(unsigned w, const XClosure &layout) {
    auto *c = new Closure;
    c->id = nextId_++;
    c->layout = &layout;
    c->nvalues = layout.nvalues;
    c->values = std::make_unique<int64_t[]>(layout.nvalues);
    c->written = std::make_unique<std::atomic<uint8_t>[]>(layout.nvalues);
    if (layout.dynamic) {
      c->state = 1;
    } else {
      c->state = 2 * int64_t(layout.static_count) + 1;
      c->expected = layout.static_count;
    }
    auto &shard = table_[c->id % kShards];
    {
      std::lock_guard lk(shard.mu);
      shard.map.emplace(c->id, c);
    }
    ++stats_[w].closures;
    return c;
  }

  // One more result is owed to `c`.
  void expectOneMore(Closure *c) {
    c->expected.fetch_add(1, std::memory_order_relaxed);
    c->state.fetch_add(2, std::memory_order_relaxed);
  }

  void release(unsigned w, Closure *c, int64_t amount) {
    int64_t now = c->state.fetch_sub(amount, std::memory_order_acq_rel) - amount;
    if (now < 0)
      throw SafetyViolation("join counter underflow on closure #" + std::to_string(c->id));
    if (now == 0)
      retire(w, c);
  }

  void deliver(unsigned w, const Dest &d, const Outcome &o) {
    Closure *c = d.closure;
    if (d.slot >= 0) {
      if (!o.has_value)
        throw InternalError("void result delivered to a value field");
      if (c->written[d.slot].exchange(1, std::memory_order_relaxed))
        throw SafetyViolation("placeholder " + std::to_string(d.slot) + " of closure #" +
                           std::to_string(c->id) + " written twice");
      c->values[d.slot] = o.value;
    }
    c->received.fetch_add(1, std::memory_order_relaxed);
    ++stats_[w].sends;
    release(w, c, 2);
  }

  void retire(unsigned w, Closure *c) {
    if (c->received.load() != c->expected.load())
      throw SafetyViolation("closure #" + std::to_string(c->id) + " retired after " +
                         std::to_string(c->received.load()) + " of " +
                         std::to_string(c->expected.load()) + " results");
    if (c == &root_) {
      done_ = true;
      wakeAll();
      return;
    }
    const XClosure &l = *c->layout;
    for (uint32_t i = l.nvalues - l.nplaceholders; i < l.nvalues; ++i)
      if (!c->written[i].load(std::memory_order_relaxed))
        throw SafetyViolation("closure #" + std::to_string(c->id) +
                           " became ready with an unfilled placeholder");
    Task t;
    t.func = l.cont;
    t.setArgs(c->values.get(), c->nvalues);
    t.dest = c->ret;
    {
      auto &shard = table_[c->id % kShards];
      std::lock_guard lk(shard.mu);
      shard.map.erase(c->id);
    }
    delete c;
    push(w, std::move(t));
  }

  void runTask(unsigned w, const Task &t, std::vector<int64_t> &slots);
};

class WorkerHost {
public:
  WorkerHost(Scheduler &s, unsigned w, const XFunc &fn, const Task &task)
      : s_(s), w_(w), fn_(fn), task_(task), stats_(s.stats_[w]) {
    if (fn.closures.size() > closures_.size())
      throw InternalError("too many closures in one task");
  }

  int64_t load(int64_t a) {
    ++stats_.memOps;
    return s_.mem_.load(a);
  }
  int64_t exchange(int64_t a, int64_t v) {
    ++stats_.memOps;
    return s_.mem_.exchange(a, v);
  }
  void store(int64_t a, int64_t v) {
    ++stats_.memOps;
    s_.mem_.store(a, v);
  }
  void step() {
    if (++stats_.steps % 4096 == 0 && s_.cfg_.max_steps &&
        s_.globalSteps_.fetch_add(4096) + 4096 > s_.cfg_.max_steps)
      throw RuntimeError("step limit of " + std::to_string(s_.cfg_.max_steps) + " exceeded");
  }

  void spawn(const XStmt &st, const int64_t *args, int64_t *) {
    Task child;
    child.func = st.callee;
    child.setArgs(args, st.args.size());
    switch (st.dest.kind) {
    case XDest::Field:
    case XDest::Counter: {
      Closure *c = closures_[st.dest.closure];
      if (!c)
        throw InternalError("spawn into an undeclared closure");
      if (c->layout->dynamic)
        s_.expectOneMore(c);
      child.dest = Dest{c, st.dest.kind == XDest::Field ? int32_t(st.dest.slot) : -1};
      break;
    }
    case XDest::Parent:
      // the child takes over part of this task's obligation
      s_.expectOneMore(task_.dest.closure);
      child.dest = task_.dest;
      break;
    case XDest::Direct:
      throw InternalError("direct spawn in explicit IR");
    }
    ++stats_.spawns;
    s_.push(w_, std::move(child));
  }

  void declare(uint32_t idx) { closures_[idx] = s_.declare(w_, fn_.closures[idx]); }

  void spawnNext(uint32_t idx, const int64_t *slots) {
    Closure *c = closures_[idx];
    if (!c)
      throw InternalError("spawn_next of an undeclared closure");
    auto &l = fn_.closures[idx];
    for (size_t i = 0; i < l.ready_src.size(); ++i)
      c->values[i] = slots[l.ready_src[i]];
    c->ret = task_.dest;
    ++stats_.spawnNexts;
    s_.release(w_, c, 1);
  }

private:
  Scheduler &s_;
  unsigned w_;
  const XFunc &fn_;
  const Task &task_;
  WorkerStats &stats_;
  std::array<Closure *, 16> closures_{};
};

void Scheduler::runTask(unsigned w, const Task &t, std::vector<int64_t> &slots) {
  const XFunc &fn = prog_.funcs[t.func];
  if (t.nargs != fn.nparams)
    throw InternalError("task `" + fn.name + "` dispatched with wrong argument count");
  slots.assign(fn.nslots, 0);
  std::copy(t.args(), t.args() + t.nargs, slots.begin());
  WorkerHost host(*this, w, fn, t);
  Outcome o = execute(fn, slots.data(), host);
  ++stats_[w].tasks[t.func];
  if (o.kind == Outcome::Returned)
    deliver(w, t.dest, o);
}

} // namespace

ExecResult runParallel(const cps::ExplicitProgram &program, std::span<const int64_t> args,
                       Memory &memory, const ExecConfig &config) {
  if (config.workers == 0)
    throw RuntimeError("at least one worker is required");
  XProgram prog = compileExplicit(program);
  Scheduler s(prog, memory, config);
  return s.run(args);
}

} // namespace cocoon::runtime
