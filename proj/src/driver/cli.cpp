#include "cocoon/driver/cli.hpp"
#include "cocoon/driver/bench.hpp"
#include "cocoon/driver/pipeline.hpp"
#include "cocoon/frontend/printer.hpp"
#include "cocoon/hardcilk/backend.hpp"
#include "cocoon/runtime/executor.hpp"
#include "cocoon/runtime/oracle.hpp"
#include "cocoon/runtime/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace cocoon::driver {

namespace {

using ojson = nlohmann::ordered_json;

struct Failure {
  int code;
  std::string message;
};

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Failure{kDiagnostics, "error: cannot read `" + path + "`"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int64_t parseInt(const std::string &text, const std::string &what) {
  int64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    throw Failure{kDiagnostics, "error: " + what + " `" + text + "` is not a 64-bit integer"};
  return v;
}

TreeConfig parseTree(const std::string &text) {
  auto comma = text.find(',');
  if (comma == std::string::npos)
    throw Failure{kDiagnostics, "error: --tree expects B,D"};
  auto b = parseInt(text.substr(0, comma), "branch factor");
  auto d = parseInt(text.substr(comma + 1), "depth");
  if (b < 1 || d < 1)
    throw Failure{kDiagnostics, "error: --tree needs B >= 1 and D >= 1"};
  return TreeConfig{uint64_t(b), uint64_t(d)};
}

std::map<std::string, unsigned> parsePes(const std::vector<std::string> &specs) {
  std::map<std::string, unsigned> out;
  for (auto &s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw Failure{kDiagnostics, "error: --pe expects <task>=<n>, got `" + s + "`"};
    auto n = parseInt(s.substr(eq + 1), "PE count");
    if (n < 1)
      throw Failure{kDiagnostics, "error: --pe count must be at least 1"};
    out[s.substr(0, eq)] = unsigned(n);
  }
  return out;
}

bool parseOnOff(const std::string &v) { return v == "on"; }

Compilation compileFile(const std::string &path, bool dae, const std::string &entry,
                        std::ostream &err) {
  auto source = readFile(path);
  CompileOptions opts;
  opts.dae = dae;
  if (!entry.empty())
    opts.entry = entry;
  auto r = compile(source, opts);
  if (!r.ok()) {
    for (auto &d : r.diagnostics)
      err << d.render(path) << "\n";
    throw Failure{kDiagnostics, ""};
  }
  return std::move(*r.value);
}

ojson resultJson(const std::optional<int64_t> &v) { return v ? ojson(*v) : ojson(nullptr); }

struct CompileArgs {
  std::string input;
  std::vector<std::string> dump;
  std::string dae = "on";
  std::string emit = "none";
  std::string entry;
  std::string out_dir = "out";
  std::string system;
};

int cmdCompile(const CompileArgs &a, std::ostream &out, std::ostream &err) {
  auto c = compileFile(a.input, parseOnOff(a.dae), a.entry, err);
  // stages print once each, in pipeline order
  auto wanted = [&](std::string_view stage) {
    return std::find(a.dump.begin(), a.dump.end(), stage) != a.dump.end();
  };
  for (std::string_view stage : {"ast", "implicit", "post-dae", "explicit"}) {
    if (!wanted(stage))
      continue;
    if (stage == "ast")
      out << frontend::printProgram(c.ast);
    else if (stage == "implicit")
      out << ir::dump(c.implicit);
    else if (stage == "post-dae")
      out << ir::dump(c.post_dae);
    else if (stage == "explicit")
      out << cps::dump(c.lowered);
  }
  if (a.emit == "hardcilk") {
    auto system = a.system.empty() ? std::filesystem::path(a.input).stem().string() : a.system;
    auto dir = std::filesystem::path(a.out_dir) / system;
    for (auto &p : hardcilk::writeSystem(c.lowered, c.relations, system, dir))
      err << "wrote " << p.string() << "\n";
  }
  return kOk;
}

struct RunArgs {
  std::string input;
  std::string mode = "oracle";
  std::string dae = "on";
  std::string entry;
  unsigned workers = 1;
  uint64_t seed = 0;
  std::string mem_file;
  uint64_t mem_size = 1 << 16;
  std::string mem_out;
  uint64_t mem_latency = 100;
  uint64_t stmt_cost = 1;
  uint64_t max_steps = 0;
  std::vector<std::string> pe;
  std::string tree;
  std::vector<std::string> args;
};

int cmdRun(const RunArgs &a, std::ostream &out, std::ostream &err) {
  auto c = compileFile(a.input, parseOnOff(a.dae), a.entry, err);
  std::vector<int64_t> args;
  for (auto &s : a.args)
    args.push_back(parseInt(s, "argument"));

  runtime::Memory mem;
  if (!a.tree.empty()) {
    mem = generateTree(parseTree(a.tree), a.mem_size);
    if (args.empty())
      args = {mem.words()[1], mem.words()[2], mem.words()[3], 0};
  } else if (!a.mem_file.empty()) {
    mem = runtime::Memory::loadImage(a.mem_file, a.mem_size);
  } else {
    mem = runtime::Memory(a.mem_size);
  }

  ojson doc;
  ojson stats;
  stats["version"] = kStatsVersion;
  stats["mode"] = a.mode;
  if (a.mode == "oracle") {
    runtime::OracleLimits limits;
    if (a.max_steps)
      limits.max_steps = a.max_steps;
    auto r = runtime::runOracle(c.post_dae, args, mem, limits);
    doc["result"] = resultJson(r.value);
    stats["calls"] = r.calls;
    stats["steps"] = r.steps;
    stats["mem_ops"] = r.mem_ops;
  } else if (a.mode == "parallel") {
    auto r = runtime::runParallel(c.lowered, args, mem, {a.workers, a.seed, a.max_steps});
    doc["result"] = resultJson(r.value);
    stats["workers"] = a.workers;
    stats["seed"] = a.seed;
    stats["tasks_executed"] = r.stats.tasks_executed;
    stats["steals"] = r.stats.steals;
    stats["spawns"] = r.stats.spawns;
    stats["spawn_nexts"] = r.stats.spawn_nexts;
    stats["sends"] = r.stats.sends;
    stats["closures_created"] = r.stats.closures_created;
    stats["steps"] = r.stats.steps;
    stats["mem_ops"] = r.stats.mem_ops;
  } else {
    runtime::CostConfig cost;
    cost.stmt_cost = a.stmt_cost;
    cost.mem_latency = a.mem_latency;
    cost.pe_counts = parsePes(a.pe);
    cost.max_steps = a.max_steps;
    auto r = runtime::simulate(c.lowered, args, mem, cost);
    doc["result"] = resultJson(r.value);
    stats["stmt_cost"] = a.stmt_cost;
    stats["mem_latency"] = a.mem_latency;
    stats["makespan"] = r.makespan;
    stats["tasks_executed"] = r.tasks_executed;
    stats["pes"] = r.pes;
    ojson util = ojson::object();
    for (auto &[k, v] : r.utilization)
      util[k] = std::round(v * 1e6) / 1e6;
    stats["utilization"] = util;
  }
  doc["stats"] = stats;
  out << doc.dump() << "\n";
  if (!a.mem_out.empty())
    mem.saveImage(a.mem_out);
  return kOk;
}

struct GraphArgs {
  uint64_t branch = 4;
  uint64_t depth = 7;
  std::string out_path;
  uint64_t mem_size = 0;
};

int cmdGenGraph(const GraphArgs &a, std::ostream &out) {
  TreeConfig cfg{a.branch, a.depth};
  auto mem = generateTree(cfg, 0, a.mem_size);
  mem.saveImage(a.out_path);
  auto l = treeLayout(cfg);
  ojson doc;
  doc["nodes"] = l.nodes;
  doc["words"] = mem.size();
  doc["rows"] = l.rows;
  doc["adj"] = l.adj;
  doc["visited"] = l.visited;
  out << doc.dump() << "\n";
  return kOk;
}

struct BenchArgs {
  std::string input;
  std::string tree = "4,7";
  std::vector<uint64_t> latencies{0, 10, 100, 500};
  uint64_t stmt_cost = 1;
  std::vector<std::string> pe;
  unsigned workers = 8;
  uint64_t seed = 1;
  std::string csv;
};

int cmdBench(const BenchArgs &a, std::ostream &out, std::ostream &err) {
  BenchConfig cfg;
  if (!a.input.empty()) {
    cfg.source = readFile(a.input);
    auto probe = compile(cfg.source, {});
    if (!probe.ok()) {
      for (auto &d : probe.diagnostics)
        err << d.render(a.input) << "\n";
      return kDiagnostics;
    }
  }
  cfg.tree = parseTree(a.tree);
  cfg.latencies = a.latencies;
  cfg.stmt_cost = a.stmt_cost;
  cfg.pe_counts = parsePes(a.pe);
  cfg.workers = a.workers;
  cfg.seed = a.seed;
  auto r = runBench(cfg);
  auto csv = benchCsv(r);
  if (a.csv.empty()) {
    out << csv;
  } else {
    std::ofstream f(a.csv, std::ios::binary);
    f << csv;
    if (!f)
      throw runtime::RuntimeError("cannot write " + a.csv);
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%.3f", r.parallel_seconds);
  err << "tree: " << r.nodes << " nodes; simulated runs visited " << r.visited_simulated
      << "; parallel run (" << a.workers << " workers) visited " << r.visited_parallel << " with "
      << r.visit_tasks_parallel << " visit tasks in " << buf << " s\n";
  if (r.visited_simulated != r.nodes || r.visited_parallel != r.nodes)
    throw runtime::RuntimeError("traversal did not visit every node");
  return kOk;
}

} // namespace

int runCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"cocoon: MiniCilk to explicit continuation-passing tasks"};
  app.require_subcommand(1);
  auto onOff = CLI::IsMember({"on", "off"});

  CompileArgs ca;
  auto *compileCmd = app.add_subcommand("compile", "Compile and optionally dump IR or emit");
  compileCmd->add_option("input", ca.input, "MiniCilk source")->required();
  compileCmd->add_option("--dump-ir", ca.dump, "ast, implicit, post-dae, explicit")
      ->delimiter(',')
      ->check(CLI::IsMember({"ast", "implicit", "post-dae", "explicit"}));
  compileCmd->add_option("--dae", ca.dae, "Apply decoupled access (on|off)")->check(onOff);
  compileCmd->add_option("--emit", ca.emit, "Backend (hardcilk|none)")
      ->check(CLI::IsMember({"hardcilk", "none"}));
  compileCmd->add_option("--entry", ca.entry, "Entry task");
  compileCmd->add_option("--out-dir", ca.out_dir, "Root of emitted artifacts");
  compileCmd->add_option("--system", ca.system, "System name (default: input file stem)");

  RunArgs ra;
  auto *runCmd = app.add_subcommand("run", "Run a program; prints {result, stats} as JSON");
  runCmd->add_option("input", ra.input, "MiniCilk source")->required();
  runCmd->add_option("--mode", ra.mode)->check(CLI::IsMember({"oracle", "parallel", "simulate"}));
  runCmd->add_option("--dae", ra.dae)->check(onOff);
  runCmd->add_option("--entry", ra.entry);
  runCmd->add_option("--workers", ra.workers)->check(CLI::Range(1u, 1024u));
  runCmd->add_option("--seed", ra.seed);
  runCmd->add_option("--mem-file", ra.mem_file, "Raw little-endian 64-bit memory image");
  runCmd->add_option("--mem-size", ra.mem_size, "Memory words (minimum when loading)");
  runCmd->add_option("--mem-out", ra.mem_out, "Write the final memory image here");
  runCmd->add_option("--mem-latency", ra.mem_latency);
  runCmd->add_option("--stmt-cost", ra.stmt_cost);
  runCmd->add_option("--max-steps", ra.max_steps, "Step limit (0: default)");
  runCmd->add_option("--pe", ra.pe, "<task>=<n> PEs in simulate mode");
  runCmd->add_option("--tree", ra.tree, "Generate a B,D tree; default args rows, adj, vis, 0");
  runCmd->add_option("args", ra.args, "Entry arguments (after --)");

  GraphArgs ga;
  auto *graphCmd = app.add_subcommand("gen-graph", "Write a CSR tree memory image");
  graphCmd->add_option("-B,--branch", ga.branch)->check(CLI::PositiveNumber);
  graphCmd->add_option("-D,--depth", ga.depth)->check(CLI::PositiveNumber);
  graphCmd->add_option("-o,--out", ga.out_path)->required();
  graphCmd->add_option("--mem-size", ga.mem_size, "Memory limit in words (0: none)");

  BenchArgs ba;
  auto *benchCmd = app.add_subcommand("bench", "DAE A/B makespan sweep over memory latency");
  benchCmd->add_option("input", ba.input, "Traversal source (default: built-in visit)");
  benchCmd->add_option("--tree", ba.tree, "B,D");
  benchCmd->add_option("--latencies", ba.latencies)->delimiter(',');
  benchCmd->add_option("--stmt-cost", ba.stmt_cost);
  benchCmd->add_option("--pe", ba.pe);
  benchCmd->add_option("--workers", ba.workers)->check(CLI::Range(1u, 1024u));
  benchCmd->add_option("--seed", ba.seed);
  benchCmd->add_option("--csv", ba.csv, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kDiagnostics;
  }

  try {
    if (*compileCmd)
      return cmdCompile(ca, out, err);
    if (*runCmd)
      return cmdRun(ra, out, err);
    if (*graphCmd)
      return cmdGenGraph(ga, out);
    return cmdBench(ba, out, err);
  } catch (const Failure &f) {
    if (!f.message.empty())
      err << f.message << "\n";
    return f.code;
  } catch (const DiagnosticError &e) {
    err << e.diagnostic().render("<input>") << "\n";
    return kDiagnostics;
  } catch (const runtime::RuntimeError &e) {
    err << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const InternalError &e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  } catch (const std::exception &e) {
    err << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

} // namespace cocoon::driver
