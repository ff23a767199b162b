#pragma once

#include "cocoon/frontend/ast.hpp"

namespace cocoon::frontend {

/// Inserts the implicit `sync` that OpenCilk performs at function exit: every
/// `return` (and the fall-through end of a void function) that may be reached
/// with spawns outstanding gets a `sync` immediately before it. Idempotent.
ast::Program normalize(const ast::Program &program);

/// Checks a program for well-formedness and reports every violation found.
/// The checks run on normalize(program), so syncs that normalization would
/// insert inside loops are reported too.
Diagnostics validate(const ast::Program &program);

} // namespace cocoon::frontend
