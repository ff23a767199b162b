#pragma once

#include "cocoon/frontend/ast.hpp"
#include "cocoon/frontend/lexer.hpp"

#include <span>
#include <string_view>

namespace cocoon::frontend {

/// Builds the AST from a token stream produced by tokenize(). `for` loops are
/// desugared into an init statement followed by a `while` whose body ends in
/// the step. The entry is `main` when declared, else the first function.
/// Throws DiagnosticError on the first syntax error.
ast::Program parse(std::span<const Token> tokens);

/// tokenize + parse.
ast::Program parseSource(std::string_view source);

} // namespace cocoon::frontend
