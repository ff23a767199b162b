#include "cocoon/driver/bench.hpp"
#include "cocoon/driver/pipeline.hpp"
#include "cocoon/runtime/executor.hpp"
#include "cocoon/runtime/simulator.hpp"

#include <chrono>
#include <cstdio>

namespace cocoon::driver {

const char *const kVisitSource = R"(// Tree traversal over a CSR graph with decoupled row lookup.
task void visit(i64 rows, i64 adj, i64 vis, i64 n) {
  #pragma bombyx dae
  let row = mem[rows + n] * 4294967296 + mem[rows + n + 1];
  let lo = row / 4294967296;
  let hi = row % 4294967296;
  if (mem_xchg(vis + n, 1) == 0) {
    for (let i = lo; i < hi; i = i + 1) {
      spawn visit(rows, adj, vis, mem[adj + i]);
    }
  }
}
)";

int64_t countVisited(const runtime::Memory &memory) {
  auto &w = memory.words();
  int64_t n = w.at(0), vis = w.at(3), count = 0;
  for (int64_t i = 0; i < n; ++i)
    count += w.at(size_t(vis + i)) != 0;
  return count;
}

BenchResult runBench(const BenchConfig &config) {
  auto plain = compileOrThrow(config.source, {false, std::nullopt});
  auto dae = compileOrThrow(config.source, {true, std::nullopt});
  auto base = generateTree(config.tree);
  auto &w = base.words();
  std::vector<int64_t> args{w[1], w[2], w[3], 0};

  BenchResult r;
  r.nodes = w[0];
  r.visited_simulated = r.nodes;
  for (auto latency : config.latencies) {
    runtime::CostConfig cost;
    cost.stmt_cost = config.stmt_cost;
    cost.mem_latency = latency;
    cost.pe_counts = config.pe_counts;
    BenchRow row;
    row.mem_latency = latency;
    for (auto *c : {&plain, &dae}) {
      auto mem = base;
      auto sim = runtime::simulate(c->lowered, args, mem, cost);
      (c == &plain ? row.makespan_no_dae : row.makespan_dae) = sim.makespan;
      r.visited_simulated = std::min(r.visited_simulated, countVisited(mem));
    }
    r.rows.push_back(row);
  }

  auto mem = base;
  runtime::ExecConfig exec{config.workers, config.seed, 0};
  auto start = std::chrono::steady_clock::now();
  auto run = runtime::runParallel(dae.lowered, args, mem, exec);
  r.parallel_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.visited_parallel = countVisited(mem);
  r.visit_tasks_parallel = run.stats.tasks_executed["visit"];
  return r;
}

std::string benchCsv(const BenchResult &result) {
  std::string out = "mem_latency,makespan_no_dae,makespan_dae,gap,reduction_pct\n";
  for (auto &row : result.rows) {
    int64_t gap = int64_t(row.makespan_no_dae) - int64_t(row.makespan_dae);
    double pct = row.makespan_no_dae ? 100.0 * double(gap) / double(row.makespan_no_dae) : 0.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%llu,%llu,%llu,%lld,%.2f\n",
                  (unsigned long long)row.mem_latency, (unsigned long long)row.makespan_no_dae,
                  (unsigned long long)row.makespan_dae, (long long)gap, pct);
    out += buf;
  }
  return out;
}

} // namespace cocoon::driver
