#pragma once

#include "cocoon/ir/implicit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cocoon::dae {

/// A statement marked for decoupled access/execute.
struct DaeSite {
  std::string function;
  ir::BlockId block;
  size_t index;
  std::vector<std::string> live_ins; // free variables, first-occurrence order
  std::optional<std::string> defined;
  Span span;
};

std::vector<DaeSite> findSites(const ir::ImplicitProgram &program);

struct DaeResult {
  ir::ImplicitProgram program;
  Diagnostics diagnostics;
};

/// Moves every marked statement into its own task `<fn>__access<k>` and
/// replaces it with a spawn of that task followed by a sync. Functions with
/// no marked statements come back unchanged. On diagnostics the returned
/// program is the input.
DaeResult apply(const ir::ImplicitProgram &program);

/// Drops every DAE mark, leaving the statements in place.
ir::ImplicitProgram strip(const ir::ImplicitProgram &program);

} // namespace cocoon::dae
