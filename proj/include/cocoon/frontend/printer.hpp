#pragma once

#include "cocoon/frontend/ast.hpp"

#include <string>

namespace cocoon::frontend {

/// Renders an expression with the minimum parentheses C precedence requires.
std::string printExpr(const ast::Expr &e);

/// Renders the program as MiniCilk source that reparses to an equal AST.
std::string printProgram(const ast::Program &p);

} // namespace cocoon::frontend
