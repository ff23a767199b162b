#pragma once

#include "cocoon/cps/explicit.hpp"
#include "cocoon/runtime/memory.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

namespace cocoon::runtime {

struct CostConfig {
  uint64_t stmt_cost = 1;
  uint64_t mem_latency = 100;
  std::map<std::string, unsigned> pe_counts; // task types not listed get one PE
  uint64_t max_steps = 0;                    // 0: unlimited
};

struct SimResult {
  std::optional<int64_t> value;
  uint64_t makespan = 0;
  std::map<std::string, uint64_t> tasks_executed;
  std::map<std::string, unsigned> pes;
  std::map<std::string, double> utilization; // busy cycles / (PEs * makespan)
};

/// Discrete-event cost model. Every task type has its own pool of PEs; a
/// ready task takes the PE of its type that frees up first, in order of
/// ready time and then creation. A task occupies its PE for
/// stmt_cost * statements + mem_latency * memory operations, and its spawns,
/// spawn_next and result take effect when it finishes. An access task (one
/// split out by DAE) only occupies its PE for the statement cost; its result
/// arrives mem_latency * memory operations later.
///
/// Tasks run functionally at dispatch, so results and memory are exact.
/// The schedule is fully determined by the program, inputs and costs.
SimResult simulate(const cps::ExplicitProgram &program, std::span<const int64_t> args,
                   Memory &memory, const CostConfig &cost);

} // namespace cocoon::runtime
