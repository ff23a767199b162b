#include "cocoon/driver/bench.hpp"
#include "cocoon/driver/cli.hpp"
#include "cocoon/driver/graph.hpp"
#include "cocoon/driver/pipeline.hpp"
#include "cocoon/frontend/printer.hpp"
#include "cocoon/hardcilk/backend.hpp"
#include "cocoon/runtime/executor.hpp"
#include "cocoon/runtime/oracle.hpp"
#include "cocoon/runtime/simulator.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace cocoon;

namespace {

py::object g_compileError;

driver::Compilation compileSource(const std::string &source, bool dae,
                                  std::optional<std::string> entry) {
  auto r = driver::compile(source, {dae, std::move(entry)});
  if (!r.ok()) {
    std::string text;
    for (auto &d : r.diagnostics)
      text += (text.empty() ? "" : "\n") + d.render("<input>");
    PyErr_SetString(g_compileError.ptr(), text.c_str());
    throw py::error_already_set();
  }
  return std::move(*r.value);
}

py::object optionalValue(const std::optional<int64_t> &v) {
  return v ? py::object(py::int_(*v)) : py::object(py::none());
}

py::dict run(const driver::Compilation &c, const std::vector<int64_t> &args, const std::string &mode,
             std::vector<int64_t> memory, unsigned workers, uint64_t seed, uint64_t memLatency,
             uint64_t stmtCost, std::map<std::string, unsigned> pes) {
  runtime::Memory mem(std::move(memory));
  py::dict out, stats;
  stats["mode"] = mode;
  {
    py::gil_scoped_release release;
    if (mode == "oracle") {
      auto r = runtime::runOracle(c.post_dae, args, mem);
      py::gil_scoped_acquire acquire;
      out["result"] = optionalValue(r.value);
      stats["steps"] = r.steps;
      stats["mem_ops"] = r.mem_ops;
      stats["calls"] = r.calls;
    } else if (mode == "parallel") {
      auto r = runtime::runParallel(c.lowered, args, mem, {workers, seed, 0});
      py::gil_scoped_acquire acquire;
      out["result"] = optionalValue(r.value);
      stats["tasks_executed"] = r.stats.tasks_executed;
      stats["steals"] = r.stats.steals;
      stats["spawns"] = r.stats.spawns;
      stats["spawn_nexts"] = r.stats.spawn_nexts;
      stats["sends"] = r.stats.sends;
      stats["closures_created"] = r.stats.closures_created;
    } else if (mode == "simulate") {
      runtime::CostConfig cfg;
      cfg.mem_latency = memLatency;
      cfg.stmt_cost = stmtCost;
      cfg.pe_counts = std::move(pes);
      auto r = runtime::simulate(c.lowered, args, mem, cfg);
      py::gil_scoped_acquire acquire;
      out["result"] = optionalValue(r.value);
      stats["makespan"] = r.makespan;
      stats["tasks_executed"] = r.tasks_executed;
      stats["pes"] = r.pes;
      stats["utilization"] = r.utilization;
    } else {
      py::gil_scoped_acquire acquire;
      throw py::value_error("mode must be oracle, parallel or simulate");
    }
  }
  out["memory"] = mem.words();
  out["stats"] = stats;
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MiniCilk to explicit continuation-passing tasks and HardCilk processing elements.";

  g_compileError = py::exception<DiagnosticError>(m, "CompileError", PyExc_ValueError);
  py::register_exception<runtime::RuntimeError>(m, "ExecutionError", PyExc_RuntimeError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_AssertionError);

  py::class_<driver::Compilation>(m, "Compilation")
      .def_property_readonly("entry", [](const driver::Compilation &c) { return c.ast.entry; })
      .def_property_readonly("tasks",
                             [](const driver::Compilation &c) {
                               std::vector<std::string> names;
                               for (auto &t : c.lowered.tasks)
                                 names.push_back(t.name);
                               return names;
                             })
      .def("dump",
           [](const driver::Compilation &c, const std::string &stage) {
             if (stage == "ast")
               return frontend::printProgram(c.ast);
             if (stage == "implicit")
               return ir::dump(c.implicit);
             if (stage == "post-dae")
               return ir::dump(c.post_dae);
             if (stage == "explicit")
               return cps::dump(c.lowered);
             throw py::value_error("stage must be ast, implicit, post-dae or explicit");
           },
           py::arg("stage"))
      .def("descriptor",
           [](const driver::Compilation &c, const std::string &system) {
             return hardcilk::toJson(hardcilk::describeSystem(c.lowered, c.relations, system));
           },
           py::arg("system"), "system.json text for the reachable tasks")
      .def("emit_hardcilk",
           [](const driver::Compilation &c, const std::filesystem::path &dir, const std::string &system) {
             return hardcilk::writeSystem(c.lowered, c.relations, system, dir);
           },
           py::arg("out_dir"), py::arg("system"))
      .def("run", &run, py::arg("args"), py::arg("mode") = "oracle",
           py::arg("memory") = std::vector<int64_t>{}, py::arg("workers") = 1, py::arg("seed") = 0,
           py::arg("mem_latency") = 100, py::arg("stmt_cost") = 1,
           py::arg("pe_counts") = std::map<std::string, unsigned>{});

  m.def("compile", &compileSource, py::arg("source"), py::arg("dae") = true,
        py::arg("entry") = py::none(), "Compile MiniCilk source; raises CompileError on diagnostics.");
  m.def("schema", &hardcilk::schemaJson, "JSON Schema of the system descriptor.");
  m.def("validate", &hardcilk::validateJson, py::arg("document"), py::arg("schema"),
        "Schema violations of a JSON document, empty when it conforms.");
  m.def("generate_tree",
        [](uint64_t branch, uint64_t depth) { return driver::generateTree({branch, depth}).words(); },
        py::arg("branch"), py::arg("depth"), "Memory image holding a complete tree in CSR form.");
  m.def("bench",
        [](uint64_t branch, uint64_t depth, std::vector<uint64_t> latencies) {
          driver::BenchConfig cfg;
          cfg.tree = {branch, depth};
          cfg.latencies = std::move(latencies);
          driver::BenchResult r;
          {
            py::gil_scoped_release release;
            r = driver::runBench(cfg);
          }
          py::list rows;
          for (auto &row : r.rows) {
            py::dict d;
            d["mem_latency"] = row.mem_latency;
            d["makespan_no_dae"] = row.makespan_no_dae;
            d["makespan_dae"] = row.makespan_dae;
            rows.append(d);
          }
          return rows;
        },
        py::arg("branch") = 4, py::arg("depth") = 7,
        py::arg("latencies") = std::vector<uint64_t>{0, 10, 100, 500});
  m.def("cli",
        [](std::vector<std::string> argv) {
          argv.insert(argv.begin(), "cocoon");
          std::vector<const char *> ptrs;
          for (auto &a : argv)
            ptrs.push_back(a.c_str());
          std::ostringstream out, err;
          int code = driver::runCli(int(ptrs.size()), ptrs.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("argv"), "Run the command line in-process; returns (exit_code, stdout, stderr).");
}
