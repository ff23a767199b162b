#pragma once

#include "cocoon/ir/implicit.hpp"
#include "cocoon/runtime/memory.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

namespace cocoon::runtime {

struct OracleLimits {
  uint64_t max_steps = 2'000'000'000;
  uint32_t max_depth = 4'000;
};

struct OracleResult {
  std::optional<int64_t> value; // none for a void entry
  uint64_t steps = 0;
  uint64_t mem_ops = 0;
  std::map<std::string, uint64_t> calls; // per function
};

/// Depth-first sequential execution of the implicit IR: a spawn is a direct
/// call and a sync does nothing. `memory` is updated in place.
OracleResult runOracle(const ir::ImplicitProgram &program, std::span<const int64_t> args,
                       Memory &memory, const OracleLimits &limits = {});

} // namespace cocoon::runtime
