#pragma once

#include "cocoon/cps/explicit.hpp"
#include "cocoon/frontend/ast.hpp"
#include "cocoon/ir/implicit.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace cocoon::driver {

struct CompileOptions {
  bool dae = true;
  std::optional<std::string> entry;
};

/// Every stage of one compilation, kept for dumping and testing.
struct Compilation {
  ast::Program ast;               // as parsed, entry resolved
  ir::ImplicitProgram implicit;   // normalized, before DAE
  ir::ImplicitProgram post_dae;   // after DAE (or with marks stripped)
  cps::ExplicitProgram lowered;
  cps::SystemRelations relations;
};

struct CompileResult {
  std::optional<Compilation> value;
  Diagnostics diagnostics;

  bool ok() const { return value.has_value(); }
};

/// Source to explicit IR. Stops at the first stage that reports
/// diagnostics; InternalError still propagates.
CompileResult compile(std::string_view source, const CompileOptions &options = {});

/// compile() that throws DiagnosticError with the first diagnostic.
Compilation compileOrThrow(std::string_view source, const CompileOptions &options = {});

} // namespace cocoon::driver
