#include "cocoon/driver/pipeline.hpp"
#include "cocoon/dae/dae.hpp"
#include "cocoon/frontend/parser.hpp"
#include "cocoon/frontend/sema.hpp"
#include "cocoon/ir/analysis.hpp"

namespace cocoon::driver {

namespace {

Diagnostics checkIr(const ir::ImplicitProgram &program) {
  Diagnostics out;
  for (auto &fn : program.functions) {
    auto facts = ir::computeLiveness(fn);
    out.insert(out.end(), facts.diagnostics.begin(), facts.diagnostics.end());
    auto structural = ir::checkStructure(fn);
    out.insert(out.end(), structural.begin(), structural.end());
  }
  return out;
}

} // namespace

CompileResult compile(std::string_view source, const CompileOptions &options) {
  CompileResult result;
  Compilation c;
  try {
    c.ast = frontend::parseSource(source);
  } catch (const DiagnosticError &e) {
    result.diagnostics.push_back(e.diagnostic());
    return result;
  }
  if (options.entry)
    c.ast.entry = *options.entry;

  result.diagnostics = frontend::validate(c.ast);
  if (!result.diagnostics.empty())
    return result;

  c.implicit = ir::buildProgram(c.ast);
  result.diagnostics = checkIr(c.implicit);
  if (!result.diagnostics.empty())
    return result;

  if (options.dae) {
    auto applied = dae::apply(c.implicit);
    if (!applied.diagnostics.empty()) {
      result.diagnostics = std::move(applied.diagnostics);
      return result;
    }
    c.post_dae = std::move(applied.program);
    result.diagnostics = checkIr(c.post_dae);
    if (!result.diagnostics.empty())
      return result;
  } else {
    c.post_dae = dae::strip(c.implicit);
  }

  c.lowered = cps::lowerProgram(c.post_dae);
  c.relations = cps::analyzeRelations(c.lowered);
  result.value = std::move(c);
  return result;
}

Compilation compileOrThrow(std::string_view source, const CompileOptions &options) {
  auto r = compile(source, options);
  if (!r.ok())
    throw DiagnosticError(r.diagnostics.front());
  return std::move(*r.value);
}

} // namespace cocoon::driver
