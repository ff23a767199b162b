#pragma once

#include "cocoon/cps/explicit.hpp"
#include "cocoon/runtime/memory.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

namespace cocoon::runtime {

struct ExecConfig {
  unsigned workers = 1;
  uint64_t seed = 0;
  uint64_t max_steps = 0; // 0: unlimited
};

struct ExecStats {
  std::map<std::string, uint64_t> tasks_executed;
  uint64_t steals = 0;
  uint64_t spawns = 0;
  uint64_t spawn_nexts = 0;
  uint64_t sends = 0;
  uint64_t closures_created = 0;
  uint64_t steps = 0;
  uint64_t mem_ops = 0;
};

struct ExecResult {
  std::optional<int64_t> value;
  ExecStats stats;
};

/// Runs the explicit system on a pool of work-stealing workers. Each worker
/// owns a deque: it pops its own newest task and steals the oldest task of a
/// victim picked by a generator seeded from `seed`. A single worker runs on
/// the calling thread and is fully deterministic.
///
/// Throws RuntimeError on program faults and on any scheduling invariant
/// violation: placeholder written twice, join counter underflow, a closure
/// retired with missing results, or every worker idle before the root
/// result arrives.
ExecResult runParallel(const cps::ExplicitProgram &program, std::span<const int64_t> args,
                       Memory &memory, const ExecConfig &config = {});

} // namespace cocoon::runtime
