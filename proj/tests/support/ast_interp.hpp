#pragma once

// Reference interpreter over the AST, independent of the IR and the bytecode
// runtime: spawn is a direct call, sync does nothing.

#include "cocoon/frontend/ast.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace cocoon::testing {

struct InterpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InterpResult {
  std::optional<int64_t> value;
  std::vector<int64_t> memory;
};

InterpResult interpret(const ast::Program &program, std::span<const int64_t> args,
                       std::vector<int64_t> memory, uint64_t maxSteps = 50'000'000);

} // namespace cocoon::testing
