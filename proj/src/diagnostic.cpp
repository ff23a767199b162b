#include "cocoon/diagnostic.hpp"

namespace cocoon {

std::string Diagnostic::render(std::string_view file) const {
  std::string out(file);
  out += ':' + std::to_string(span.line) + ':' + std::to_string(span.column) +
         ": error: " + message;
  return out;
}

DiagnosticError::DiagnosticError(Diagnostic d)
    : std::runtime_error(d.message), diag_(std::move(d)) {}

} // namespace cocoon
