#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cocoon {

/// Location of a source range. Lines and columns are 1-based; byte offsets
/// are a half-open range into the original source.
struct Span {
  uint32_t line = 0;
  uint32_t column = 0;
  uint32_t begin = 0;
  uint32_t end = 0;

  bool operator==(const Span &) const = default;
};

struct Diagnostic {
  Span span;
  std::string message;

  /// `file:line:col: error: message`
  std::string render(std::string_view file) const;
};

using Diagnostics = std::vector<Diagnostic>;

/// Thrown by the lexer and parser, which stop at the first error.
class DiagnosticError : public std::runtime_error {
public:
  explicit DiagnosticError(Diagnostic d);
  const Diagnostic &diagnostic() const { return diag_; }

private:
  Diagnostic diag_;
};

/// A broken internal invariant: a compiler or runtime bug, never a user error.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

} // namespace cocoon
